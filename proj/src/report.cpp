#include "waring_gaps/report.hpp"

#include "waring_gaps/exact.hpp"

namespace waring_gaps {

void Report::add(std::string name, Verdict verdict, nlohmann::json witness) {
  conditions_.push_back({std::move(name), verdict, std::move(witness), false});
}

void Report::add_invariant(std::string name, bool holds, nlohmann::json witness) {
  conditions_.push_back(
      {std::move(name), holds ? Verdict::pass : Verdict::fail, std::move(witness), true});
}

void Report::check(std::string name, bool holds, nlohmann::json witness) {
  add(std::move(name), holds ? Verdict::pass : Verdict::fail, std::move(witness));
}

const Condition* Report::find(const std::string& name) const {
  for (const auto& c : conditions_)
    if (c.name == name) return &c;
  return nullptr;
}

Verdict Report::verdict_of(const std::string& name) const {
  const Condition* c = find(name);
  if (!c) throw Error("report has no condition '" + name + "'");
  return c->verdict;
}

Outcome Report::outcome() const {
  bool failed = false, open = false;
  for (const auto& c : conditions_) {
    if (c.invariant && c.verdict != Verdict::pass) return Outcome::invalid;
    failed |= c.verdict == Verdict::fail;
    open |= c.verdict == Verdict::inconclusive;
  }
  if (failed) return Outcome::fail;
  if (open) return Outcome::inconclusive;
  return Outcome::pass;
}

nlohmann::json Report::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions_) {
    conds.push_back({{"name", c.name},
                     {"verdict", to_string(c.verdict)},
                     {"kind", c.invariant ? "invariant" : "hypothesis"},
                     {"witness", c.witness}});
  }
  nlohmann::json s = summary;
  s["outcome"] = to_string(outcome());
  return {{"certificate", certificate}, {"per_condition", conds}, {"summary", s}};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "fail";
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "PASS";
    case Outcome::fail: return "FAIL";
    case Outcome::inconclusive: return "INCONCLUSIVE";
    case Outcome::invalid: return "INVALID";
  }
  return "INVALID";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "inconclusive") return Verdict::inconclusive;
  throw Error("unknown verdict '" + s + "'");
}

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::fail || b == Verdict::fail) return Verdict::fail;
  if (a == Verdict::inconclusive || b == Verdict::inconclusive)
    return Verdict::inconclusive;
  return Verdict::pass;
}

}  // namespace waring_gaps
