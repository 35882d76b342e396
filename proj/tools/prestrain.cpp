// Command-line driver: classify metrics, evaluate plate energies, run the conformal sweep
// and the non-coercivity table.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prestrain/energy.hpp"
#include "prestrain/io.hpp"
#include "prestrain/metric.hpp"
#include "prestrain/scaling.hpp"

namespace {

using namespace prestrain;

enum ExitCode : int { kOk = 0, kInternal = 1, kSpecError = 2, kToleranceError = 3 };

struct Output {
  std::string out;
  bool timestamp = false;
};

void emit(Json report, const Output& o) {
  if (o.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    report["run_info"] = Json{{"timestamp", buf}};
  }
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw SpecError("cannot write '" + o.out + "'");
  f << text;
}

std::vector<double> parse_number_list(const std::string& text, const char* flag) {
  if (detail::trim(text).empty()) throw SpecError(std::string(flag) + ": empty list");
  return detail::parse_list(text, flag);
}

Json breakdown_json(const EnergyBreakdown& e) {
  return Json{{"stretching", e.stretching}, {"bending", e.bending}, {"curvature", e.curvature},
              {"excess", e.excess},         {"total", e.total}};
}

Json array_json(const auto& values) {
  Json a = Json::array();
  for (double v : values) a.push_back(number_or_null(v));
  return a;
}

// ---- classify ----------------------------------------------------------------

int run_classify(const std::string& spec_path, const Output& o) {
  const std::string text = read_file(spec_path);
  const MetricSpec spec = parse_spec(text);
  const ScalingReport r = classify(spec);
  Json j;
  j["provenance"] = provenance("classify", text, &spec);
  j["kind"] = spec.kind == MetricKind::oscillatory ? "oscillatory" : "non_oscillatory";
  j["kirchhoff_norms"] = Json{{"R1212", r.kirchhoff_norms[0]}, {"R1213", r.kirchhoff_norms[1]}, {"R1223", r.kirchhoff_norms[2]}};
  Json vk;
  for (std::size_t c = 0; c < 6; ++c) vk[RiemannBlock::kNames[c]] = r.vonkarman_norms[c];
  j["vonkarman_norms"] = vk;
  j["excess1"] = r.excess1;
  j["excess2"] = r.excess2;
  j["constr_residuals"] = Json{{"sup", array_json(r.constr_sup)}, {"l2", array_json(r.constr_l2)}};
  j["tolerances_applied"] = Json{{"curvature", r.curvature_tolerance},
                                 {"excess1", r.excess1_tolerance},
                                 {"excess2", r.excess2_tolerance},
                                 {"constr", r.constr_tolerance}};
  j["verdict"] = r.verdict_label();
  if (r.verdict == Verdict::conformal_h2n) j["conformal_order"] = r.conformal_order;
  emit(std::move(j), o);
  return kOk;
}

// ---- energy --------------------------------------------------------------------

struct EnergyArgs {
  std::string functional;
  std::string spec;
  std::string fields;
  bool reconstruct = false;
};

Json state_json(const ImmersionState& s) {
  return Json{{"frame_residual", s.frame_residual}, {"path_residual", s.path_residual}, {"orientation_ok", s.orientation_ok}};
}

int run_energy(const EnergyArgs& a, const Output& o) {
  const std::string text = read_file(a.spec);
  MetricSpec spec = parse_spec(text);
  const bool vk = a.functional == "i4" || a.functional == "i4o";

  std::optional<FieldTable> table;
  if (!a.fields.empty()) {
    table.emplace(read_fields_csv(read_file(a.fields), spec.domain));
    spec.grid.nx = table->grid().nx();
    spec.grid.ny = table->grid().ny();
  } else if (vk || !a.reconstruct) {
    throw SpecError("--fields is required for " + a.functional + (vk ? "" : " without --reconstruct"));
  }
  validate(spec);
  const Grid2D grid = spec.make_grid();
  const AnyMetric metric = geometry_metric(spec);
  const Midplate mid(metric, grid, spec.lame);

  const bool have_y = table && table->has("y1") && table->has("y2") && table->has("y3");
  const bool rebuild = a.reconstruct || !have_y;
  Json j;
  j["provenance"] = provenance("energy " + a.functional, text, &spec);
  j["provenance"]["grid"]["nx"] = grid.nx();
  j["provenance"]["grid"]["ny"] = grid.ny();
  ImmersionState state = [&] {
    if (!rebuild) return cosserat_fields(mid, table->vectors("y1", "y2", "y3"));
    if (!vk && !a.reconstruct) throw SpecError("fields CSV: missing columns y1, y2, y3");
    const CurvatureCheck k = curvature_norms(mid, spec.tol, false);
    if (!k.holds)
      std::cerr << "warning: curvature conditions fail; the reconstructed immersion is path dependent\n";
    return reconstruct_immersion(metric, mid);
  }();
  j["immersion"] = state_json(state);
  j["immersion"]["reconstructed"] = rebuild;

  auto oscillatory = [&] {
    return OscillatoryMetric(spec.kind == MetricKind::oscillatory ? spec : embed_non_oscillatory(spec));
  };

  if (a.functional == "i2") {
    EnergyBreakdown e;
    e.bending = eval_i2(mid, state, spec.tol);
    e.finalize();
    j["energy"] = breakdown_json(e);
  } else if (a.functional == "i2o") {
    const OscillatoryMetric osc = oscillatory();
    const OscillatoryKirchhoff r = eval_i2o(mid, osc, state, spec.tol);
    EnergyBreakdown e;
    e.bending = r.bending;
    e.excess = r.excess;
    e.finalize();
    j["energy"] = breakdown_json(e);
  } else {
    VonKarmanInput in{state, table->vectors("V1", "V2", "V3"), table->sym_tensors("S11", "S12", "S22")};
    if (a.functional == "i4") {
      const VonKarmanResult r = eval_i4(mid, in, spec.tol);
      j["energy"] = breakdown_json(r.energy);
      j["diagnostics"] = Json{{"v_residual", r.v_residual}, {"curvature_crosscheck", r.curvature_crosscheck}};
    } else {
      const OscillatoryMetric osc = oscillatory();
      const OscillatoryVonKarmanResult r = eval_i4o(mid, osc, in, spec.tol);
      j["energy"] = breakdown_json(r.energy);
      j["diagnostics"] = Json{{"v_residual", r.v_residual}, {"curvature_crosscheck", r.curvature_crosscheck}};
      j["compatibility"] = Json{{"r1_sup", r.r1_sup}, {"r2_sup", r.r2_sup}, {"r1_l2", r.r1_l2},
                                {"r2_l2", r.r2_l2}, {"compatible", r.compatible}};
      if (r.effective_mismatch) j["compatibility"]["effective_mismatch"] = *r.effective_mismatch;
    }
  }
  emit(std::move(j), o);
  return kOk;
}

// ---- conformal -------------------------------------------------------------------

struct ConformalArgs {
  std::string phi;
  double mu = 1.0;
  double lambda = 1.0;
  std::string h_list = "0.1,0.05,0.02,0.01";
  std::string plot;
};

int run_conformal(const ConformalArgs& a, const Output& o) {
  const Expr phi = parse(a.phi);
  const Lame lame{a.mu, a.lambda};
  if (!(lame.mu > 0.0) || !(lame.lambda >= 0.0)) throw SpecError("--mu must be positive and --lambda nonnegative");
  const std::vector<double> hs = parse_number_list(a.h_list, "--h-list");
  const ConformalReport r = conformal_verify(phi, hs, lame);

  Json rows = Json::array();
  for (const ConformalRow& row : r.rows)
    rows.push_back(Json{{"h", row.h}, {"energy", row.energy}, {"scaled", number_or_null(row.scaled)}});
  Json j;
  j["provenance"] = provenance("conformal", "", nullptr);
  j["provenance"]["phi"] = to_string(phi);
  j["provenance"]["lame"] = Json{{"mu", lame.mu}, {"lambda", lame.lambda}};
  j["order"] = r.n;
  j["phi_derivative"] = r.phi_n;
  j["rows"] = rows;
  j["slope"] = number_or_null(r.slope);
  j["extrapolated_coefficient"] = number_or_null(r.extrapolated);
  j["upper_coefficient"] = number_or_null(r.upper_coefficient);
  j["floor"] = r.floor ? Json(*r.floor) : Json(nullptr);
  j["floor_ok"] = r.floor_ok;
  if (!a.plot.empty()) {
    std::ofstream f(a.plot, std::ios::binary);
    if (!f) throw SpecError("cannot write '" + a.plot + "'");
    f.precision(17);
    f << "h,scaled_energy\n";
    for (const ConformalRow& row : r.rows) f << row.h << ',' << row.scaled << '\n';
  }
  emit(std::move(j), o);
  if (!r.floor_ok) {
    std::cerr << "error: lower-bound floor exceeds the extrapolated coefficient\n";
    return kToleranceError;
  }
  return kOk;
}

// ---- demo-noncoercivity ---------------------------------------------------------------

int run_noncoercivity(const std::string& n_list, const Output& o) {
  const std::vector<double> ns = parse_number_list(n_list, "--n-list");
  for (double n : ns)
    if (!(n >= 0.0)) throw SpecError("--n-list: values must be nonnegative");
  const std::vector<NonCoercivityRow> rows = non_coercivity_demo(ns);
  Json table = Json::array();
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    table.push_back(Json{{"n", r.n}, {"delta_star", r.delta_star}, {"min_term", r.min_term},
                         {"hessian_term", r.hessian_term}, {"ratio", r.ratio}});
    if (i > 0 && ns[i] > ns[i - 1]) monotone = monotone && r.ratio > rows[i - 1].ratio;
  }
  Json j;
  j["provenance"] = provenance("demo-noncoercivity", "", nullptr);
  j["rows"] = table;
  j["monotone"] = monotone;
  bool growth_ok = true;
  if (rows.size() >= 2 && rows.front().n > 0.0) {
    const double q = rows.back().n / rows.front().n;
    const double growth = rows.back().ratio / rows.front().ratio;
    growth_ok = growth >= 0.5 * q * q;
    j["growth"] = Json{{"observed", growth}, {"required", 0.5 * q * q}, {"ok", growth_ok}};
  }
  emit(std::move(j), o);
  if (!growth_ok) {
    std::cerr << "error: ratio growth below (n_last/n_first)^2 / 2\n";
    return kToleranceError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prestrained thin-film plate energies and scaling diagnostics"};
  app.require_subcommand(1);
  Output out;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", out.out, "Write the JSON report to this file instead of stdout");
    sub->add_flag("--timestamp", out.timestamp, "Add a run timestamp under run_info");
  };

  std::string spec_path;
  auto* classify_cmd = app.add_subcommand("classify", "Curvature, excess and compatibility checks with a scaling verdict");
  classify_cmd->add_option("--spec", spec_path, "Metric spec file")->required();
  add_output(classify_cmd);

  EnergyArgs energy;
  auto* energy_cmd = app.add_subcommand("energy", "Evaluate a limiting plate energy on sampled fields");
  energy_cmd->add_option("functional", energy.functional, "i2, i2o, i4 or i4o")
      ->required()
      ->check(CLI::IsMember({"i2", "i2o", "i4", "i4o"}));
  energy_cmd->add_option("--spec", energy.spec, "Metric spec file")->required();
  energy_cmd->add_option("--fields", energy.fields, "Field CSV (x1,x2,y1..y3[,V1..V3,S11,S12,S22])");
  energy_cmd->add_flag("--reconstruct", energy.reconstruct, "Use the frame-integrated immersion for y");
  add_output(energy_cmd);

  ConformalArgs conformal;
  auto* conformal_cmd = app.add_subcommand("conformal", "Energy scaling of G = exp(2 phi(x3)) Id3");
  conformal_cmd->add_option("--phi", conformal.phi, "phi as an expression in x3")->required();
  conformal_cmd->add_option("--mu", conformal.mu, "Lame modulus mu")->capture_default_str();
  conformal_cmd->add_option("--lambda", conformal.lambda, "Lame modulus lambda")->capture_default_str();
  conformal_cmd->add_option("--h-list", conformal.h_list, "Comma-separated thicknesses")->capture_default_str();
  conformal_cmd->add_option("--plot", conformal.plot, "Write (h, E/h^2n) pairs to this CSV");
  add_output(conformal_cmd);

  std::string n_list = "1,2,4,8,16";
  auto* demo_cmd = app.add_subcommand("demo-noncoercivity", "Ratio table showing I4 is not coercive");
  demo_cmd->add_option("--n-list", n_list, "Comma-separated n values")->capture_default_str();
  add_output(demo_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kSpecError;
  }

  try {
    if (*classify_cmd) return run_classify(spec_path, out);
    if (*energy_cmd) return run_energy(energy, out);
    if (*conformal_cmd) return run_conformal(conformal, out);
    if (*demo_cmd) return run_noncoercivity(n_list, out);
  } catch (const ToleranceError& e) {
    std::cerr << "tolerance violation: " << e.what() << '\n';
    return kToleranceError;
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return kSpecError;
  } catch (const DomainError& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return kSpecError;
  } catch (const UnboundVariable& e) {
    std::cerr << "spec error: " << e.what() << '\n';
    return kSpecError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
