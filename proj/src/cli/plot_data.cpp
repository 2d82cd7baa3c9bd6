#include <cstdio>
#include <sstream>

#include "hklab/experiment.hpp"

namespace hklab {

namespace {

std::string fmt(const json& v) {
  if (!v.is_number()) return v.is_string() ? v.get<std::string>() : "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

bool has_suite(const json& bundle, const std::string& suite) {
  for (const auto& p : bundle.at("points"))
    if (p.at("suites").contains(suite)) return true;
  return false;
}

void need(const json& bundle, const std::string& suite) {
  if (!bundle.at("points").empty() && !has_suite(bundle, suite))
    throw Error("bundle has no '" + suite + "' suite");
}

}  // namespace

std::string emit_plot_data(const json& bundle, const std::string& kind) {
  std::ostringstream out;
  if (kind == "kernel-profile") {
    need(bundle, "propagator");
    out << "point,t,p11,p12\n";
    for (const auto& p : bundle.at("points")) {
      if (!p.at("suites").contains("propagator")) continue;
      for (const auto& r : p.at("suites").at("propagator"))
        if (r.at("inequality") == "kernel-profile")
          for (const auto& row : r.at("witness").at("rows"))
            out << p.at("index").get<std::size_t>() << "," << fmt(row[0]) << "," << fmt(row[1]) << "," << fmt(row[2])
                << "\n";
    }
  } else if (kind == "phi-vs-lambda") {
    need(bundle, "harnack");
    out << "point,lambda,C_PHI,C_PHI_hat\n";
    for (const auto& p : bundle.at("points")) {
      if (!p.at("suites").contains("harnack")) continue;
      json lam = p.at("axes").contains("lambda") ? p.at("axes").at("lambda") : json(0.0);
      for (const auto& r : p.at("suites").at("harnack"))
        if (r.at("inequality") == "phi") {
          json hat = r.at("values").contains("C_PHI_hat") ? r.at("values").at("C_PHI_hat") : json("nan");
          out << p.at("index").get<std::size_t>() << "," << fmt(lam) << "," << fmt(r.at("constant")) << ","
              << fmt(hat) << "\n";
        }
    }
  } else if (kind == "constant-vs-level") {
    out << "point,level,suite,inequality,constant,status\n";
    for (const auto& p : bundle.at("points")) {
      const auto& ax = p.at("axes");
      json level = ax.contains("level") ? ax.at("level") : ax.contains("resolution") ? ax.at("resolution") : json("nan");
      for (const auto& [suite, reps] : p.at("suites").items())
        for (const auto& r : reps) {
          if (r.at("inequality") == "kernel-profile") continue;
          out << p.at("index").get<std::size_t>() << "," << fmt(level) << "," << suite << ","
              << r.at("inequality").get<std::string>() << "," << fmt(r.at("constant")) << ","
              << r.at("status").get<std::string>() << "\n";
        }
    }
  } else {
    throw Error("unknown plot-data kind '" + kind + "' (kernel-profile | phi-vs-lambda | constant-vs-level)");
  }
  return out.str();
}

}  // namespace hklab
