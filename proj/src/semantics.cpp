#include "bbi/semantics.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bbi {

namespace {

int popcount8(uint8_t v) { return std::popcount(static_cast<unsigned>(v)); }

uint8_t full_mask(int size) { return static_cast<uint8_t>((1u << size) - 1); }

}  // namespace

bool Model::is_pd() const {
  for (int a = 0; a < size; a++)
    for (int b = 0; b < size; b++)
      if (popcount8(comp[a][b]) > 1) return false;
  return true;
}

bool Model::is_td() const {
  for (int a = 0; a < size; a++)
    for (int b = 0; b < size; b++)
      if (popcount8(comp[a][b]) != 1) return false;
  return true;
}

bool Model::is_iu() const {
  for (int a = 0; a < size; a++)
    for (int b = 0; b < size; b++)
      if ((comp[a][b] & 1) && !(a == 0 && b == 0)) return false;
  return true;
}

bool Model::is_cancellative() const {
  for (int a = 0; a < size; a++)
    for (int b = 0; b < size; b++)
      for (int d = 0; d < size; d++)
        if (b != d && (comp[a][b] & comp[a][d])) return false;
  return true;
}

std::string Model::describe() const {
  std::ostringstream os;
  os << "monoid of size " << size << " (unit = 0)\n";
  auto set_text = [&](uint8_t m) {
    std::string s = "{";
    for (int i = 0; i < size; i++)
      if ((m >> i) & 1) s += (s.size() > 1 ? "," : "") + std::to_string(i);
    return s + "}";
  };
  for (int a = 0; a < size; a++) {
    for (int b = 0; b < size; b++) os << a << "o" << b << "=" << set_text(comp[a][b]) << "  ";
    os << "\n";
  }
  for (const auto& [atom, mask] : valuation) os << "v(" << atom << ") = " << set_text(mask) << "\n";
  return os.str();
}

bool validate_model(const Model& m) {
  if (m.size < 1 || m.size > kMaxModelSize) return false;
  uint8_t full = full_mask(m.size);
  for (int a = 0; a < m.size; a++) {
    if (m.comp[0][a] != (uint8_t)(1u << a)) return false;  // identity
    for (int b = 0; b < m.size; b++) {
      if ((m.comp[a][b] & ~full) != 0) return false;
      if (m.comp[a][b] != m.comp[b][a]) return false;  // commutativity
    }
  }
  // associativity over the set extension: a o (b o c) == (a o b) o c
  for (int a = 0; a < m.size; a++)
    for (int b = 0; b < m.size; b++)
      for (int c = 0; c < m.size; c++) {
        uint8_t l = 0, r = 0;
        for (int k = 0; k < m.size; k++) {
          if ((m.comp[b][c] >> k) & 1) l |= m.comp[a][k];
          if ((m.comp[a][b] >> k) & 1) r |= m.comp[k][c];
        }
        if (l != r) return false;
      }
  return true;
}

uint8_t forces_set(const Model& m, const Formula& f) {
  uint8_t full = full_mask(m.size);
  switch (f.conn()) {
    case Conn::Atom: {
      auto it = m.valuation.find(f.atom_name());
      if (it == m.valuation.end())
        throw std::invalid_argument("atom without a valuation: " + f.atom_name());
      return static_cast<uint8_t>(it->second & full);
    }
    case Conn::Top: return full;
    case Conn::Bot: return 0;
    case Conn::MEmp: return 1;  // only the unit
    case Conn::Not: return static_cast<uint8_t>(~forces_set(m, f.sub()) & full);
    case Conn::And: return forces_set(m, f.lhs()) & forces_set(m, f.rhs());
    case Conn::Or: return forces_set(m, f.lhs()) | forces_set(m, f.rhs());
    case Conn::Imp:
      return static_cast<uint8_t>((~forces_set(m, f.lhs()) | forces_set(m, f.rhs())) & full);
    case Conn::Star: {
      uint8_t sa = forces_set(m, f.lhs());
      uint8_t sb = forces_set(m, f.rhs());
      uint8_t out = 0;
      for (int a = 0; a < m.size; a++) {
        if (!((sa >> a) & 1)) continue;
        for (int b = 0; b < m.size; b++)
          if ((sb >> b) & 1) out |= m.comp[a][b];
      }
      return static_cast<uint8_t>(out & full);
    }
    case Conn::Wand: {
      uint8_t sa = forces_set(m, f.lhs());
      uint8_t sb = forces_set(m, f.rhs());
      uint8_t out = 0;
      for (int w = 0; w < m.size; w++) {
        bool ok = true;
        for (int a = 0; a < m.size && ok; a++) {
          if (!((sa >> a) & 1)) continue;
          if (m.comp[w][a] & ~sb) ok = false;
        }
        if (ok) out |= (uint8_t)(1u << w);
      }
      return out;
    }
  }
  return 0;
}

bool forces(const Model& m, int world, const Formula& f) {
  if (world < 0 || world >= m.size) throw std::invalid_argument("world out of range");
  return (forces_set(m, f) >> world) & 1;
}

bool valid_in(const Model& m, const Formula& f) { return forces_set(m, f) == full_mask(m.size); }

namespace {

struct Enumerator {
  int size;
  ModelClassFlags flags;
  const std::function<bool(const Model&)>& visit;
  Model m;
  std::vector<std::pair<int, int>> cells;  // free entries (a <= b, both >= 1)
  std::vector<uint8_t> choices;            // allowed masks per entry
  bool stopped = false;

  Enumerator(int n, const ModelClassFlags& fl, const std::function<bool(const Model&)>& v)
      : size(n), flags(fl), visit(v) {
    m.size = n;
    for (int a = 0; a < n; a++)
      for (int b = 0; b < n; b++) m.comp[a][b] = 0;
    for (int a = 0; a < n; a++) {
      m.comp[0][a] = m.comp[a][0] = static_cast<uint8_t>(1u << a);
    }
    for (int a = 1; a < n; a++)
      for (int b = a; b < n; b++) cells.push_back({a, b});
    for (uint8_t mask = 0; mask <= full_mask(n); mask++) {
      if (flags.td && popcount8(mask) != 1) continue;
      if (flags.pd && popcount8(mask) > 1) continue;
      if (flags.iu && (mask & 1)) continue;  // nothing composes to the unit
      choices.push_back(mask);
    }
  }

  // check the associativity condition on triples whose entries are all known
  bool partial_ok(size_t filled) const {
    auto known = [&](int a, int b) {
      if (a == 0 || b == 0) return true;
      int lo = std::min(a, b), hi = std::max(a, b);
      for (size_t i = 0; i < filled; i++)
        if (cells[i].first == lo && cells[i].second == hi) return true;
      return false;
    };
    for (int a = 0; a < size; a++)
      for (int b = 0; b < size; b++) {
        if (!known(a, b)) continue;
        for (int c = 0; c < size; c++) {
          if (!known(b, c)) continue;
          bool all = true;
          uint8_t l = 0, r = 0;
          for (int k = 0; k < size && all; k++) {
            if ((m.comp[b][c] >> k) & 1) {
              if (!known(a, k)) all = false;
              else l |= m.comp[a][k];
            }
            if ((m.comp[a][b] >> k) & 1) {
              if (!known(k, c)) all = false;
              else r |= m.comp[k][c];
            }
          }
          if (all && l != r) return false;
        }
      }
    return true;
  }

  bool class_ok() const {
    if (flags.can && !m.is_cancellative()) return false;
    return true;
  }

  void rec(size_t i) {
    if (stopped) return;
    if (i == cells.size()) {
      if (!validate_model(m) || !class_ok()) return;
      if (!visit(m)) stopped = true;
      return;
    }
    auto [a, b] = cells[i];
    for (uint8_t mask : choices) {
      m.comp[a][b] = m.comp[b][a] = mask;
      if (partial_ok(i + 1)) rec(i + 1);
      if (stopped) return;
    }
    m.comp[a][b] = m.comp[b][a] = 0;
  }
};

}  // namespace

void enumerate_models(int size, const ModelClassFlags& flags,
                      const std::function<bool(const Model&)>& visit) {
  if (size < 1) throw std::invalid_argument("model size must be positive");
  if (size > kMaxModelSize)
    throw std::invalid_argument("model enumeration is capped at size " +
                                std::to_string(kMaxModelSize));
  Enumerator e(size, flags, visit);
  e.rec(0);
}

long count_models(int size, const ModelClassFlags& flags) {
  long n = 0;
  enumerate_models(size, flags, [&](const Model&) {
    n++;
    return true;
  });
  return n;
}

std::optional<Countermodel> countermodel(const Formula& f, int max_size,
                                         const ModelClassFlags& flags) {
  if (max_size < 1 || max_size > kMaxModelSize)
    throw std::invalid_argument("countermodel search is capped at size " +
                                std::to_string(kMaxModelSize));
  std::vector<std::string> atoms = atoms_of(f);
  if (atoms.size() > 4)
    throw std::invalid_argument("countermodel search supports at most 4 atoms");

  std::optional<Countermodel> found;
  for (int n = 1; n <= max_size && !found; n++) {
    enumerate_models(n, flags, [&](const Model& skel) {
      Model m = skel;
      long combos = 1;
      for (size_t i = 0; i < atoms.size(); i++) combos *= (1 << n);
      for (long v = 0; v < combos; v++) {
        long rest = v;
        for (const std::string& a : atoms) {
          m.valuation[a] = static_cast<uint8_t>(rest & full_mask(n));
          rest >>= n;
        }
        uint8_t sat = forces_set(m, f);
        if (sat != full_mask(n)) {
          int world = 0;
          while ((sat >> world) & 1) world++;
          found = Countermodel{m, world};
          return false;
        }
      }
      return true;
    });
  }
  return found;
}

}  // namespace bbi
