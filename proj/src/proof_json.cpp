#include "bbi/proof_json.hpp"

#include <fstream>
#include <json.hpp>

namespace bbi {

namespace {

using nlohmann::json;

json label_to_json(const Label& l) {
  if (l.is_eps()) return "eps";
  if (l.is_var()) return "?" + l.name();
  return l.name();
}

Label label_from_json(const json& j) {
  if (!j.is_string()) throw ProofFormatError("label must be a string");
  std::string s = j.get<std::string>();
  if (s == "eps") return Label::eps();
  if (!s.empty() && s[0] == '?') return Label::var(s.substr(1));
  if (s.empty()) throw ProofFormatError("empty label");
  return Label::world(s);
}

json rel_to_json(const RelAtom& a) {
  return json::array({label_to_json(a.left), label_to_json(a.right), label_to_json(a.parent)});
}

RelAtom rel_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ProofFormatError("relational atom must be [l, r, p]");
  return {label_from_json(j[0]), label_from_json(j[1]), label_from_json(j[2])};
}

json lf_to_json(const LabelledFormula& f) {
  return json::array({label_to_json(f.label), to_string(f.formula)});
}

LabelledFormula lf_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ProofFormatError("labelled formula must be [label, text]");
  return {label_from_json(j[0]), parse_formula(j[1].get<std::string>())};
}

json sequent_to_json(const Sequent& s) {
  json rels = json::array(), lhs = json::array(), rhs = json::array();
  for (const RelAtom& a : s.rels) rels.push_back(rel_to_json(a));
  for (const LabelledFormula& f : s.lhs) lhs.push_back(lf_to_json(f));
  for (const LabelledFormula& f : s.rhs) rhs.push_back(lf_to_json(f));
  return json{{"rels", rels}, {"lhs", lhs}, {"rhs", rhs}};
}

Sequent sequent_from_json(const json& j) {
  Sequent s;
  for (const json& r : j.value("rels", json::array())) s.rels.add(rel_from_json(r));
  for (const json& f : j.value("lhs", json::array())) s.lhs.add(lf_from_json(f));
  for (const json& f : j.value("rhs", json::array())) s.rhs.add(lf_from_json(f));
  return s;
}

json args_to_json(const RuleArgs& a) {
  json out = json::object();
  if (a.principal) out["principal"] = lf_to_json(*a.principal);
  if (!a.rels.empty()) {
    json rels = json::array();
    for (const RelAtom& r : a.rels) rels.push_back(rel_to_json(r));
    out["rels"] = rels;
  }
  if (!a.labels.empty()) {
    json labels = json::array();
    for (const Label& l : a.labels) labels.push_back(label_to_json(l));
    out["labels"] = labels;
  }
  if (a.cut_label) out["cutLabel"] = label_to_json(*a.cut_label);
  if (a.cut_formula) out["cutFormula"] = to_string(*a.cut_formula);
  if (a.cut_first) out["first"] = sequent_to_json(*a.cut_first);
  return out;
}

RuleArgs args_from_json(const json& j) {
  RuleArgs a;
  if (j.contains("principal")) a.principal = lf_from_json(j["principal"]);
  if (j.contains("rels"))
    for (const json& r : j["rels"]) a.rels.push_back(rel_from_json(r));
  if (j.contains("labels"))
    for (const json& l : j["labels"]) a.labels.push_back(label_from_json(l));
  if (j.contains("cutLabel")) a.cut_label = label_from_json(j["cutLabel"]);
  if (j.contains("cutFormula")) a.cut_formula = parse_formula(j["cutFormula"].get<std::string>());
  if (j.contains("first")) a.cut_first = sequent_from_json(j["first"]);
  return a;
}

json node_to_json(const Derivation& d) {
  json premises = json::array();
  for (const Derivation& p : d.premises) premises.push_back(node_to_json(p));
  return json{{"rule", rule_name(d.rule)},
              {"sequent", sequent_to_json(d.conclusion)},
              {"params", args_to_json(d.args)},
              {"premises", premises}};
}

Derivation node_from_json(const json& j) {
  if (!j.is_object()) throw ProofFormatError("proof node must be an object");
  auto rule = rule_from_name(j.value("rule", std::string()));
  if (!rule) throw ProofFormatError("unknown rule '" + j.value("rule", std::string()) + "'");
  Derivation d;
  d.rule = *rule;
  if (!j.contains("sequent")) throw ProofFormatError("proof node without sequent");
  d.conclusion = sequent_from_json(j["sequent"]);
  d.args = args_from_json(j.value("params", json::object()));
  for (const json& p : j.value("premises", json::array())) d.premises.push_back(node_from_json(p));
  return d;
}

}  // namespace

std::string proof_to_json(const Derivation& d, int indent) {
  return node_to_json(d).dump(indent);
}

Derivation proof_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProofFormatError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return node_from_json(j);
  } catch (const ParseError& e) {
    throw ProofFormatError(std::string("bad formula text: ") + e.what());
  }
}

void write_proof_file(const std::string& path, const Derivation& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << proof_to_json(d) << "\n";
}

Derivation read_proof_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return proof_from_json(text);
}

}  // namespace bbi
