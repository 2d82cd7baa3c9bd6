#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <regex>

#include "hklab/assumptions.hpp"
#include "hklab/cutoff.hpp"
#include "hklab/experiment.hpp"
#include "hklab/families.hpp"
#include "hklab/harnack.hpp"
#include "hklab/hke.hpp"

using namespace hklab;

namespace {

struct Common {
  std::string space = "path:8";
  std::string psi;
  std::string skew;
  std::string scheme = "be";
  std::uint64_t seed = 1;

  void add(CLI::App* app, bool with_skew = true) {
    app->add_option("--space", space, "space spec, e.g. gasket:3, path:128,length=1, file:g.json");
    app->add_option("--psi", psi, "scaling function, e.g. gasket, power:2 (default per space)");
    if (with_skew) {
      app->add_option("--skew", skew, "skew profile and scale: h.json:1.0 or default:0.5");
      app->add_option("--scheme", scheme, "time stepping: be, be:dt=0.01, theta:0.5,dt=0.01, exact");
    }
    app->add_option("--seed", seed, "random seed");
  }

  GraphPtr graph() const { return build_space(SpaceSpec::parse(space)); }
  ScalingFunction Psi(const MetricMeasureGraph& g) const {
    return psi.empty() ? default_psi(g) : ScalingFunction::parse(psi);
  }
  FormSchedule schedule(FormPtr f) const { return parse_schedule(std::move(f), skew.empty() ? "reference" : "skew:" + skew); }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

int status_exit(const std::vector<CertReport>& reps) {
  for (const auto& r : reps)
    if (r.status == Status::fail || r.status == Status::infeasible) return 2;
  return 0;
}

json reports_json(const std::vector<CertReport>& reps) {
  json a = json::array();
  for (const auto& r : reps) a.push_back(to_json(r));
  return a;
}

std::optional<VertexSet> parse_domain(const MetricMeasureGraph& g, const std::string& text) {
  if (text.empty() || text == "global") return std::nullopt;
  static const std::regex re(R"(dirichlet:ball\(\s*(\d+)\s*,\s*([0-9.eE+\-/]+)\s*\))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw Error("domain must be global or dirichlet:ball(x,r)");
  auto x = static_cast<VertexId>(std::stoull(m[1]));
  require(x < g.size(), "domain center out of range");
  return ball(g, x, std::stod(m[2]));
}

std::vector<double> parse_t_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 4) throw Error("t-grid must be lo:hi:geometric|linear:n");
  double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
  int n = std::stoi(parts[3]);
  require(lo > 0 && hi >= lo && n >= 1, "t-grid needs 0 < lo <= hi and n >= 1");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    double f = n == 1 ? 0.0 : double(i) / (n - 1);
    if (parts[2] == "geometric") out.push_back(lo * std::pow(hi / lo, f));
    else if (parts[2] == "linear") out.push_back(lo + (hi - lo) * f);
    else throw Error("t-grid spacing must be geometric or linear");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hklab: heat kernel and Harnack inequality laboratory on weighted graphs"};
  app.require_subcommand(1);
  int code = 0;

  // space
  Common sp;
  std::string space_out;
  auto* space = app.add_subcommand("space", "build a space and print its summary");
  sp.add(space, false);
  space->add_option("--out", space_out, "write the graph as JSON");
  space->callback([&] {
    auto g = sp.graph();
    json j{{"label", g->label()},     {"vertices", g->size()},   {"edges", g->edges().size()},
           {"mesh", g->mesh()},       {"diameter", g->diameter()}, {"radius", g->radius()},
           {"geodesic", g->geodesic()}, {"total_mass", g->total_mass()}, {"psi", sp.Psi(*g).describe()}};
    if (!space_out.empty()) write_text(space_out, graph_to_json(*g).dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
  });

  // forms
  Common fm;
  std::string profile_path, forms_out;
  double scale = 1.0;
  auto* forms = app.add_subcommand("forms", "harmonic profiles and non-symmetric schedules");
  forms->require_subcommand(1);
  auto* fprof = forms->add_subcommand("profile", "default harmonic profile of the space");
  fm.add(fprof, false);
  fprof->add_option("--out", forms_out, "output JSON (default stdout)");
  fprof->callback([&] {
    auto form = std::make_shared<const ReferenceForm>(fm.graph());
    auto [b, v] = default_boundary(form->graph());
    write_text(forms_out, profile_to_json(harmonic_profile(*form, b, v)).dump(2) + "\n");
  });
  auto* fskew = forms->add_subcommand("build-skew", "schedule E* + lambda (D_h - D_h^T)");
  fm.add(fskew, false);
  fskew->add_option("--profile", profile_path, "profile JSON (default: harmonic default profile)");
  fskew->add_option("--scale", scale, "lambda");
  fskew->add_option("--out", forms_out, "output JSON (default stdout)");
  fskew->callback([&] {
    auto form = std::make_shared<const ReferenceForm>(fm.graph());
    std::string src = profile_path.empty() ? "default" : profile_path;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", scale);
    auto s = parse_schedule(form, "skew:" + src + ":" + buf);
    write_text(forms_out, schedule_to_json(s).dump(2) + "\n");
  });

  // cutoff
  Common cu;
  double eps = 0.125, R = 0, r = 0, c1 = -1, c2 = -1;
  VertexId center = 0;
  std::string cut_out;
  bool certify_cut = false;
  auto* cutoff = app.add_subcommand("cutoff", "cutoff functions");
  cutoff->require_subcommand(1);
  auto* cbuild = cutoff->add_subcommand("build", "layered cutoff for B(x,R) in B(x,R+r)");
  cu.add(cbuild, false);
  cbuild->add_option("--eps", eps, "epsilon");
  cbuild->add_option("--center", center, "center vertex");
  cbuild->add_option("--R", R, "inner radius")->required();
  cbuild->add_option("--r", r, "annulus width")->required();
  cbuild->add_option("--c1", c1, "layer constant c1 (default: measured)");
  cbuild->add_option("--c2", c2, "layer constant c2 (default: measured)");
  cbuild->add_flag("--certify", certify_cut, "certify CSA on a smooth+noise family");
  cbuild->add_option("--out", cut_out, "output JSON (default stdout)");
  cbuild->callback([&] {
    auto g = cu.graph();
    auto form = std::make_shared<const ReferenceForm>(g);
    auto Psi = cu.Psi(*g);
    require(center < g->size(), "center out of range");
    Rng rng(cu.seed);
    auto fam = random_smooth_family(*g, 16, rng);
    fam.append(random_noise_family(*g, 8, rng));
    if (c1 < 0 || c2 < 0) {
      std::vector<double> widths;
      for (double s = r; s >= g->mesh() && widths.size() < 6; s /= 2) widths.push_back(s);
      if (widths.empty()) widths.push_back(r);
      auto lc = measure_layer_constants(*g, *form, Psi, center, R, widths, fam);
      if (c1 < 0) c1 = std::max(lc.c1, 1e-12);
      if (c2 < 0) c2 = lc.c2;
    }
    auto psi = layered_cutoff(*g, center, R, r, eps, c1, c2, Psi);
    json j = cutoff_to_json(psi);
    j["c1"] = c1;
    j["c2"] = c2;
    if (certify_cut) {
      auto rep = attach_csa(*form, psi, Psi, fam);
      j = cutoff_to_json(psi);
      j["c1"] = c1;
      j["c2"] = c2;
      j["certification"] = to_json(rep);
      code = status_exit({rep});
    }
    write_text(cut_out, j.dump(2) + "\n");
  });

  // certify
  Common ce;
  std::string suite_name;
  std::vector<std::string> sets;
  double sweep_eps = 0.125, sweep_p = 2.0;
  auto* certify = app.add_subcommand("certify", "run one certification suite on one space");
  certify->add_option("suite", suite_name, "vd rvd psi pi wpi pseudo sobolev csa assumptions propagator harnack hke")
      ->required();
  ce.add(certify);
  certify->add_option("--set", sets, "suite parameter key=value (e.g. R=0.25)");
  certify->add_option("--eps", sweep_eps, "layered cutoff epsilon");
  certify->add_option("--p", sweep_p, "exponent for energy and mean value estimates");
  certify->callback([&] {
    ExperimentConfig cfg;
    cfg.space = ce.space;
    cfg.psi = ce.psi;
    cfg.schedule = ce.skew.empty() ? "reference" : "skew:" + ce.skew;
    cfg.solver = ce.scheme;
    cfg.seed = ce.seed;
    cfg.suites = {suite_name};
    ordered_suites(cfg.suites);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value");
      cfg.params[suite_name][kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    auto pts = expand_points(cfg);
    auto& pt = pts.front();
    pt.eps = sweep_eps;
    pt.p = sweep_p;
    auto reps = run_suite(suite_name, cfg, pt, {});
    std::cout << reports_json(reps).dump(2) << "\n";
    code = status_exit(reps);
  });

  // prop
  Common pr;
  double ps = 0, pt_ = 1;
  std::string domain, prop_out;
  auto* prop = app.add_subcommand("prop", "propagators and kernels");
  prop->require_subcommand(1);
  auto* pkern = prop->add_subcommand("kernel", "kernel p(t, ., s, .) as binary matrix + JSON header");
  pr.add(pkern);
  pkern->add_option("--s", ps, "start time");
  pkern->add_option("--t", pt_, "end time");
  pkern->add_option("--domain", domain, "global or dirichlet:ball(x,r)");
  pkern->add_option("--out", prop_out, "output prefix (writes .bin and .json)")->required();
  pkern->callback([&] {
    auto g = pr.graph();
    auto form = std::make_shared<const ReferenceForm>(g);
    auto k = kernel(pr.schedule(form), ps, pt_, SolverConfig::parse(pr.scheme), parse_domain(*g, domain));
    write_kernel(k, prop_out);
    auto pos = check_positivity(k);
    std::cout << json{{"header", kernel_header(k)}, {"positivity", to_json(pos)}}.dump(2) << "\n";
  });

  // harnack
  Common ha;
  std::string tau = "1/6,1/3,1/2,1", family = "kernels:16", csv_out, summary_out;
  double delta = 0.5, radius = 0;
  std::string hcenter = "center";
  auto* harnack = app.add_subcommand("harnack", "Harnack-type estimates");
  harnack->require_subcommand(1);
  auto* hphi = harnack->add_subcommand("phi", "C_PHI over a solution family");
  ha.add(hphi);
  hphi->add_option("--tau", tau, "tau1..tau4");
  hphi->add_option("--delta", delta, "delta");
  hphi->add_option("--family", family, "kernels:N and/or random:N, comma separated");
  hphi->add_option("--center", hcenter, "center vertex or 'center'");
  hphi->add_option("--radius", radius, "cylinder radius (default: radius/4)");
  hphi->add_option("--csv", csv_out, "per-member CSV");
  hphi->add_option("--out", summary_out, "summary JSON (default stdout)");
  hphi->callback([&] {
    auto g = ha.graph();
    auto form = std::make_shared<const ReferenceForm>(g);
    auto Psi = ha.Psi(*g);
    auto sched = ha.schedule(form);
    auto cfg = SolverConfig::parse(ha.scheme);
    VertexId x = hcenter == "center" ? g->center_vertex() : static_cast<VertexId>(std::stoull(hcenter));
    require(x < g->size(), "center out of range");
    const double rr = radius > 0 ? radius : g->radius() / 4;
    HarnackParams hp;
    hp.tau = HarnackParams::parse_tau(tau);
    hp.delta = delta;
    std::vector<Trajectory> fam;
    std::stringstream ss(family);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      require(colon != std::string::npos, "family item must be kernels:N or random:N");
      auto n = static_cast<std::size_t>(std::stoull(item.substr(colon + 1)));
      std::string kind = item.substr(0, colon);
      if (kind == "kernels") {
        VertexSet B = ball(*g, x, rr);
        std::vector<VertexId> src;
        for (std::size_t i = 0; i < n && i < B.size(); ++i) src.push_back(B[i * B.size() / std::min(n, B.size())]);
        auto f = phi_family(sched, x, 0, rr, Psi, src, cfg);
        fam.insert(fam.end(), f.begin(), f.end());
      } else if (kind == "random") {
        auto f = random_phi_family(sched, x, 0, rr, Psi, n, cfg, ha.seed);
        fam.insert(fam.end(), f.begin(), f.end());
      } else {
        throw Error("unknown family kind '" + kind + "'");
      }
    }
    auto rep = phi_estimate(*g, fam, x, 0, rr, Psi, hp);
    if (!csv_out.empty()) {
      std::ostringstream out;
      out << "member,id,sup_minus,inf_plus,ratio,ratio_hat\n";
      for (const auto& m : rep.witness.at("members"))
        out << m.at("member").get<std::size_t>() << "," << m.at("id").get<std::string>() << ","
            << m.at("sup_minus").get<double>() << "," << m.at("inf_plus").get<double>() << ","
            << (m.contains("ratio") ? m.at("ratio").get<double>() : NAN) << ","
            << (m.contains("ratio_hat") ? m.at("ratio_hat").get<double>() : NAN) << "\n";
      write_text(csv_out, out.str());
    }
    write_text(summary_out, to_json(rep).dump(2) + "\n");
    code = status_exit({rep});
  });

  // hke
  Common hk;
  double rate_R = 1, rate_t = 1;
  std::string variant = "phi", t_grid = "0.01:1:geometric:16", hke_csv, hke_out;
  VertexId dg_x = 0, dg_y = 0;
  auto* hke = app.add_subcommand("hke", "rate functions and heat kernel bounds");
  hke->require_subcommand(1);
  auto* hrate = hke->add_subcommand("rate", "evaluate Phi or Phi_beta2");
  hrate->add_option("--psi", hk.psi, "scaling function")->default_val("power:2");
  hrate->add_option("--R", rate_R, "distance");
  hrate->add_option("--t", rate_t, "time");
  hrate->add_option("--variant", variant, "phi or phi_beta");
  hrate->callback([&] {
    RateFunction rf{ScalingFunction::parse(hk.psi.empty() ? "power:2" : hk.psi),
                    variant == "phi_beta" ? RateVariant::phi_beta : RateVariant::phi, false};
    if (variant != "phi" && variant != "phi_beta") throw Error("variant must be phi or phi_beta");
    std::cout << json{{"R", rate_R}, {"t", rate_t}, {"variant", variant}, {"value", rate(rf, rate_R, rate_t)}}.dump(2)
              << "\n";
  });
  auto* hup = hke->add_subcommand("upper", "fit the sub-Gaussian upper bound over a time grid");
  hk.add(hup);
  hup->add_option("--t-grid", t_grid, "lo:hi:geometric|linear:n");
  hup->add_option("--csv", hke_csv, "per-point ratios");
  hup->add_option("--out", hke_out, "JSON report (default stdout)");
  hup->callback([&] {
    auto g = hk.graph();
    auto form = std::make_shared<const ReferenceForm>(g);
    auto Psi = hk.Psi(*g);
    auto sched = hk.schedule(form);
    auto cfg = SolverConfig::parse(hk.scheme);
    Propagator prop(sched, cfg);
    std::vector<KernelMatrix> ks;
    for (double t : parse_t_grid(t_grid)) ks.push_back(prop.kernel(0, t));
    Rng rng(hk.seed);
    UpperFitSpec us;
    us.alpha_minus_c = verify_assumption0(sched, random_smooth_family(*g, 4, rng)).values.at("alpha_minus_c");
    auto rep = upper_hke_fit(*g, ks, Psi, us);
    if (!hke_csv.empty()) {
      // ratio p V^{1/2} V^{1/2} / exp(-Phi_b2(d, C'(t-s)) + (alpha-c)(t-s)) per point
      RateFunction rf{Psi, RateVariant::phi_beta, false};
      const double Cp = rep.values.count("C_prime") ? rep.values.at("C_prime") : 0.0;
      std::ostringstream out;
      out << "t,x,y,d,p,ratio\n";
      for (const auto& k : ks) {
        const double tau = k.t - k.s, rad = std::min(Psi.inverse(tau / 2), g->radius());
        for (VertexId x = 0; x < g->size(); ++x)
          for (VertexId y = 0; y < g->size(); ++y) {
            double p = k.p(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
            double d = g->distance(x, y);
            double ph = d > 0 && Cp > 0 ? rate(rf, d, Cp * tau) : 0.0;
            double ratio = p * std::sqrt(volume(*g, x, rad) * volume(*g, y, rad)) * std::exp(ph - us.alpha_minus_c * tau);
            out << tau << "," << x << "," << y << "," << d << "," << p << "," << ratio << "\n";
          }
      }
      write_text(hke_csv, out.str());
    }
    write_text(hke_out, to_json(rep).dump(2) + "\n");
    code = status_exit({rep});
  });
  auto* hdg = hke->add_subcommand("dg", "Davies-Gaffney bilinear bound between two vertices");
  hk.add(hdg);
  hdg->add_option("--x", dg_x, "first vertex")->required();
  hdg->add_option("--y", dg_y, "second vertex")->required();
  hdg->callback([&] {
    auto g = hk.graph();
    auto form = std::make_shared<const ReferenceForm>(g);
    auto sched = hk.schedule(form);
    require(dg_x < g->size() && dg_y < g->size(), "vertex out of range");
    Rng rng(hk.seed);
    DaviesSpec ds;
    ds.alpha_minus_c = verify_assumption0(sched, random_smooth_family(*g, 4, rng)).values.at("alpha_minus_c");
    auto rep = davies_gaffney_check(sched, dg_x, dg_y, 0, SolverConfig::parse(hk.scheme), hk.Psi(*g), ds);
    std::cout << to_json(rep).dump(2) << "\n";
    code = status_exit({rep});
  });

  // run
  std::string config_path, run_out;
  auto* run = app.add_subcommand("run", "run a config file (suites x sweeps) and write bundle.json + CSVs");
  run->add_option("config", config_path, "config file (key = value sections, or JSON)")->required();
  run->add_option("--out", run_out, "output directory (overrides the config)");
  run->callback([&] {
    auto cfg = ExperimentConfig::load(config_path);
    if (!run_out.empty()) cfg.output_dir = run_out;
    auto b = run_experiment(cfg);
    write_bundle(b, cfg);
    std::cout << cfg.output_dir << "/bundle.json\n";
    code = b.exit_code;
  });

  // plot-data
  std::string bundle_path, kind = "constant-vs-level", plot_out;
  auto* plot = app.add_subcommand("plot-data", "long-format CSV from a bundle");
  plot->add_option("bundle", bundle_path, "bundle.json")->required();
  plot->add_option("--kind", kind, "kernel-profile | phi-vs-lambda | constant-vs-level");
  plot->add_option("--out", plot_out, "output CSV (default stdout)");
  plot->callback([&] { write_text(plot_out, emit_plot_data(load_bundle(bundle_path), kind)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
