#include "hklab/report.hpp"

#include <cmath>

namespace hklab {

std::string to_string(Status s) {
  switch (s) {
    case Status::measured: return "measured";
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::infeasible: return "infeasible";
    case Status::not_applicable: return "not_applicable";
  }
  return "measured";
}

Status status_from_string(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "infeasible") return Status::infeasible;
  if (s == "not_applicable") return Status::not_applicable;
  if (s == "measured") return Status::measured;
  throw Error("unknown status '" + s + "'");
}

CertReport& CertReport::with_budget(double b) {
  budget = b;
  if (status == Status::infeasible || status == Status::not_applicable) return *this;
  status = (std::isfinite(constant) && constant <= b) ? Status::pass : Status::fail;
  return *this;
}

bool CertReport::ok() const {
  return status == Status::pass || status == Status::measured ||
         status == Status::not_applicable;
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

namespace {
json num(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? json("inf") : (x < 0 ? json("-inf") : json("nan"));
}
double num_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}
}  // namespace

json to_json(const CertReport& r) {
  json j;
  j["inequality"] = r.inequality;
  j["constant"] = num(r.constant);
  j["status"] = to_string(r.status);
  if (r.budget) j["budget"] = num(*r.budget);
  j["family"] = r.family;
  j["provenance"] = r.provenance;
  j["witness"] = r.witness;
  json vals = json::object();
  for (const auto& [k, v] : r.values) vals[k] = num(v);
  j["values"] = vals;
  j["notes"] = r.notes;
  if (r.witness_function) j["witness_function"] = vec_to_json(*r.witness_function);
  return j;
}

CertReport report_from_json(const json& j) {
  CertReport r;
  r.inequality = j.at("inequality").get<std::string>();
  r.constant = num_from(j.at("constant"));
  r.status = status_from_string(j.at("status").get<std::string>());
  if (j.contains("budget")) r.budget = num_from(j["budget"]);
  r.family = j.value("family", "");
  r.provenance = j.value("provenance", "");
  r.witness = j.value("witness", json::object());
  if (j.contains("values"))
    for (auto it = j["values"].begin(); it != j["values"].end(); ++it) r.values[it.key()] = num_from(it.value());
  r.notes = j.value("notes", std::vector<std::string>{});
  if (j.contains("witness_function")) r.witness_function = vec_from_json(j["witness_function"]);
  return r;
}

}  // namespace hklab
