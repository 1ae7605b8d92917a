#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "bbi/formula.hpp"

namespace bbi {

inline constexpr int kMaxModelSize = 4;

/// Classes of monoid skeletons: every composition at most a singleton (pd),
/// exactly a singleton (td), indivisible unit (iu), cancellative (can).
struct ModelClassFlags {
  bool pd = false;
  bool td = false;
  bool iu = false;
  bool can = false;
};

/// A finite non-deterministic monoid with a valuation. Element 0 is the unit.
/// comp[a][b] is the bitmask of elements in a o b.
struct Model {
  int size = 1;
  std::array<std::array<uint8_t, kMaxModelSize>, kMaxModelSize> comp{};
  std::map<std::string, uint8_t> valuation;

  bool related(int a, int b, int c) const { return (comp[a][b] >> c) & 1; }

  bool is_pd() const;
  bool is_td() const;
  bool is_iu() const;
  bool is_cancellative() const;

  std::string describe() const;  // composition table, valuation
};

/// Identity, commutativity and associativity, checked from scratch.
bool validate_model(const Model& m);

/// The set of worlds forcing f, as a bitmask.
uint8_t forces_set(const Model& m, const Formula& f);

bool forces(const Model& m, int world, const Formula& f);
bool valid_in(const Model& m, const Formula& f);

/// All composition tables over {0..size-1} with unit 0 satisfying the monoid
/// conditions and the requested class flags; valuations are left empty.
/// Enumeration stops early when the visitor returns false.
void enumerate_models(int size, const ModelClassFlags& flags,
                      const std::function<bool(const Model&)>& visit);

long count_models(int size, const ModelClassFlags& flags);

struct Countermodel {
  Model model;  // with valuation filled in
  int world;
};

/// Search all skeletons up to max_size and all valuations of f's atoms for a
/// world where f fails. None is not a validity proof, only exhaustion of the
/// bound. Requires max_size <= 4 and at most 4 distinct atoms.
std::optional<Countermodel> countermodel(const Formula& f, int max_size,
                                         const ModelClassFlags& flags = {});

}  // namespace bbi
