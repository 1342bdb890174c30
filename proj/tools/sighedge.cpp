// sighedge: file-based batch front end for the signature pricing and hedging library.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sighedge/hedging.hpp"
#include "sighedge/implied.hpp"
#include "sighedge/io.hpp"
#include "sighedge/leadlag.hpp"
#include "sighedge/market.hpp"
#include "sighedge/payoffs.hpp"
#include "sighedge/version.hpp"

namespace sh = sighedge;
using sh::json;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kInput = 4, kCapacity = 5, kNumerical = 6, kDataQuality = 7 };

int exit_code(sh::ErrorKind k) {
  switch (k) {
    case sh::ErrorKind::io: return kIo;
    case sh::ErrorKind::input: return kInput;
    case sh::ErrorKind::capacity: return kCapacity;
    case sh::ErrorKind::numerical: return kNumerical;
    case sh::ErrorKind::data_quality: return kDataQuality;
  }
  return 1;
}

void error_record(std::string_view kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

// FNV-1a, enough to tell input files apart in a manifest.
std::string fingerprint(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  json inputs = json::array();
  json parameters = json::object();
  std::optional<std::uint64_t> seed;
  int threads = 0;

  std::string read(const std::string& path) {
    auto text = sh::read_text_file(path);
    inputs.push_back({{"path", path}, {"bytes", text.size()}, {"fnv1a", fingerprint(text)}});
    return text;
  }
  json read_json(const std::string& path) {
    const auto text = read(path);
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw sh::InputError("'" + path + "' is not valid JSON: " + e.what());
    }
  }

  // Writes `text` and a manifest next to it.
  void write(const std::string& path, const std::string& text, const std::vector<std::string>& extra = {}) const {
    sh::write_text_file(path, text);
    json outputs = json::array({path});
    for (const auto& e : extra) outputs.push_back(e);
    json m{{"tool", "sighedge"},
           {"version", sh::kVersion},
           {"command", command},
           {"argv", argv},
           {"inputs", inputs},
           {"parameters", parameters},
           {"outputs", outputs},
           {"threads", threads}};
    m["seed"] = seed ? json(*seed) : json(nullptr);
    sh::write_text_file(path + ".manifest.json", m.dump(2) + "\n");
  }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

sh::LetterSet parse_letters(const std::string& s) {
  if (s.empty() || s == "all") return sh::all_letters(sh::kLeadLagDim);
  sh::LetterSet out = 0;
  for (char c : s) {
    if (c == ',' || c == ' ') continue;
    if (c < '1' || c > '4') throw sh::InputError("letters must be digits 1..4, got '" + s + "'");
    out |= sh::LetterSet{1} << (c - '1');
  }
  return out;
}

// power:q | exp:lambda[:degree] | poly:a0,a1,...
std::vector<double> parse_risk(const std::string& s) {
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "power") return sh::risk_power(rest.empty() ? 2 : static_cast<int>(sh::parse_double(rest, "risk degree")));
  if (head == "exp") {
    const auto c2 = rest.find(':');
    const double lambda = sh::parse_double(rest.substr(0, c2), "risk aversion");
    const int deg = c2 == std::string::npos ? 6 : static_cast<int>(sh::parse_double(rest.substr(c2 + 1), "Taylor degree"));
    return sh::risk_exponential(lambda, deg);
  }
  if (head == "poly") {
    std::vector<double> a;
    for (const auto& f : sh::split_csv_line(rest)) a.push_back(sh::parse_double(f, "risk coefficient"));
    return a;
  }
  throw sh::InputError("risk must be power:q, exp:lambda[:degree] or poly:a0,a1,...");
}

struct ModelOpts {
  std::string kind = "black_scholes";
  double sigma = 0.2, rate = 0.0, v0 = 0.04, kappa = 2.0, theta = 0.04, xi = 0.3, rho = -0.7, mu = 0.0;
  std::string measure = "risk_neutral";
  bool discount = false;
  double T = 1.0;
  int steps = 252;
  std::size_t paths = 10000;
  std::uint64_t seed = 1;

  void add(CLI::App* app, bool with_paths = true) {
    app->add_option("--model", kind, "black_scholes or heston")->check(CLI::IsMember({"black_scholes", "heston"}));
    app->add_option("--sigma", sigma, "Black-Scholes volatility");
    app->add_option("--rate", rate, "short rate");
    app->add_option("--v0", v0, "Heston initial variance");
    app->add_option("--kappa", kappa, "Heston mean reversion");
    app->add_option("--theta", theta, "Heston long-run variance");
    app->add_option("--xi", xi, "Heston vol of vol");
    app->add_option("--rho", rho, "Heston correlation");
    app->add_option("--measure", measure)->check(CLI::IsMember({"risk_neutral", "objective"}));
    app->add_option("--mu", mu, "drift under the objective measure");
    app->add_flag("--discount", discount, "simulate discounted prices");
    app->add_option("--T", T, "horizon");
    app->add_option("--steps", steps, "time steps");
    if (with_paths) app->add_option("--paths", paths, "number of paths");
    app->add_option("--seed", seed, "random seed");
  }

  sh::ModelSpec spec() const {
    sh::ModelSpec m = kind == "heston" ? sh::ModelSpec::heston(rate) : sh::ModelSpec::black_scholes(sigma, rate);
    m.v0 = v0;
    m.kappa = kappa;
    m.theta = theta;
    m.xi = xi;
    m.rho = rho;
    m.mu = mu;
    m.measure = measure == "objective" ? sh::Measure::objective : sh::Measure::risk_neutral;
    m.discount = discount;
    return m;
  }

  json to_json() const {
    return {{"model", kind}, {"sigma", sigma}, {"rate", rate}, {"v0", v0},     {"kappa", kappa},
            {"theta", theta}, {"xi", xi},      {"rho", rho},   {"mu", mu},     {"measure", measure},
            {"discount", discount}, {"T", T}, {"steps", steps}, {"paths", paths}, {"seed", seed}};
  }
};

struct PayoffOpts {
  std::string kind;
  double K = 1.0, B = 1.2, K_var = 0.0;
  std::string functional;

  void add(CLI::App* app) {
    app->add_option("--payoff", kind, "payoff kind")->required();
    app->add_option("--K", K, "strike");
    app->add_option("--B", B, "up-and-out barrier");
    app->add_option("--K-var", K_var, "variance swap strike");
    app->add_option("--functional", functional, "tensor JSON for custom_signature");
  }

  sh::PayoffSpec spec(Run& run) const {
    sh::PayoffSpec s;
    s.kind = sh::payoff_kind_from_string(kind);
    s.strike = s.kind == sh::PayoffKind::variance_swap ? K_var : K;
    s.barrier = B;
    if (s.kind == sh::PayoffKind::custom_signature) {
      if (functional.empty()) throw sh::InputError("custom_signature needs --functional");
      s.functional = sh::tensor_from_json(run.read_json(functional));
    }
    return s;
  }
};

// Accepts either a SignaturePayoff JSON or a bare tensor JSON.
sh::SignaturePayoff load_payoff(Run& run, const std::string& path) {
  return sh::signature_payoff_from_json(run.read_json(path));
}

void print_line(const std::string& s) { std::cout << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-based pricing and hedging of path-dependent derivatives"};
  app.set_version_flag("--version", std::string(sh::kVersion));
  app.require_subcommand(1);
  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  app.add_option("--threads", run.threads, "worker cap, 0 = all cores")->envname("SIGHEDGE_THREADS");

  // simulate -------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "sample a model ensemble to CSV");
  ModelOpts sim_m;
  sim_m.add(sim);
  std::string sim_out;
  sim->add_option("--out", sim_out, "ensemble CSV")->required();
  sim->callback([&] {
    run.command = "simulate";
    run.seed = sim_m.seed;
    run.parameters = sim_m.to_json();
    const auto e = sh::sample_paths(sim_m.spec(), sim_m.T, sim_m.steps, sim_m.paths, sim_m.seed, run.threads);
    run.write(sim_out, sh::ensemble_to_csv(e));
  });

  // expsig ---------------------------------------------------------------
  auto* es = app.add_subcommand("expsig", "expected lead-lag signature from an ensemble or a model");
  ModelOpts es_m;
  es_m.add(es);
  std::string es_ens, es_out, es_letters;
  int es_order = 4;
  std::optional<double> es_disc;
  std::optional<double> es_t0, es_x0, es_v0;
  es->add_option("--ensemble", es_ens, "ensemble CSV; without it paths are simulated and streamed");
  es->add_option("--order", es_order, "truncation order")->check(CLI::Range(1, 16));
  es->add_option("--discount-rate", es_disc, "discount the tensor by exp(-rate T)");
  es->add_option("--letters", es_letters, "letter subset, e.g. 124 (default all)");
  es->add_option("--start-time", es_t0, "condition on the state at this time");
  es->add_option("--start-price", es_x0, "price at the start time");
  es->add_option("--start-variance", es_v0, "Heston variance at the start time");
  es->add_option("--out", es_out, "ExpectedSignature JSON")->required();
  es->callback([&] {
    run.command = "expsig";
    const auto letters = parse_letters(es_letters);
    sh::ExpectedSignature result;
    run.parameters = {{"order", es_order}, {"letters", sh::letters_to_json(letters)}};
    if (es_disc) run.parameters["discount_rate"] = *es_disc;
    if (!es_ens.empty()) {
      const auto e = sh::ensemble_from_csv(run.read(es_ens));
      result = sh::expected_signature_mc(e, es_order, es_disc, letters, run.threads);
    } else {
      run.seed = es_m.seed;
      run.parameters["model"] = es_m.to_json();
      sh::ModelState st;
      if (es_t0) st.t = *es_t0;
      if (es_x0) st.x = *es_x0;
      if (es_v0) st.v = *es_v0;
      run.parameters["start"] = {{"t", st.t}, {"x", st.x}, {"v", sh::json_number_or_null(st.v)}};
      result = sh::expected_signature_model(es_m.spec(), es_m.T, es_m.steps, es_m.paths, es_m.seed, es_order, es_disc,
                                            letters, run.threads, st);
    }
    run.write(es_out, dump(sh::es_to_json(result)));
  });

  // fitpayoff ------------------------------------------------------------
  auto* fit = app.add_subcommand("fitpayoff", "regress a payoff on lead-lag signature features");
  PayoffOpts fit_p;
  fit_p.add(fit);
  std::string fit_ens, fit_out, fit_letters;
  int fit_order = 4;
  std::optional<double> fit_ridge;
  fit->add_option("--ensemble", fit_ens, "training ensemble CSV")->required();
  fit->add_option("--order", fit_order, "signature order")->check(CLI::Range(2, 12));
  fit->add_option("--ridge", fit_ridge, "absolute ridge (default relative 1e-8)");
  fit->add_option("--letters", fit_letters, "letter subset for the features");
  fit->add_option("--out", fit_out, "SignaturePayoff JSON")->required();
  fit->callback([&] {
    run.command = "fitpayoff";
    const auto spec = fit_p.spec(run);
    const auto e = sh::ensemble_from_csv(run.read(fit_ens));
    const auto letters = parse_letters(fit_letters);
    run.parameters = {{"order", fit_order}, {"spec", sh::payoff_spec_to_json(spec)}, {"letters", sh::letters_to_json(letters)}};
    if (fit_ridge) run.parameters["ridge"] = *fit_ridge;
    const auto sp = sh::fit_signature_payoff(spec, e, fit_order, fit_ridge, run.threads, letters);
    run.write(fit_out, dump(sh::signature_payoff_to_json(sp)));
  });

  // hedge ----------------------------------------------------------------
  auto* hedge = app.add_subcommand("hedge", "optimal signature hedge from an expected signature");
  std::string h_payoff, h_es, h_out, h_risk = "power:2", h_mode = "plain", h_param = "position", h_prefix;
  int h_M = 1;
  std::optional<double> h_p0, h_pt;
  double h_alpha = 0.0, h_liq = std::numeric_limits<double>::infinity();
  std::vector<std::string> h_basket;
  std::vector<double> h_lo, h_hi;
  bool h_truncate = false;
  hedge->add_option("--payoff", h_payoff, "SignaturePayoff or tensor JSON")->required();
  hedge->add_option("--es", h_es, "ExpectedSignature JSON (conditional on the prefix end when delayed)")->required();
  hedge->add_option("--risk", h_risk, "power:q, exp:lambda[:degree] or poly:a0,a1,...");
  hedge->add_option("--M", h_M, "strategy order")->check(CLI::Range(0, 8));
  hedge->add_option("--p0", h_p0, "initial capital (default: model price of the payoff)");
  hedge->add_option("--mode", h_mode, "plain, fixed_cost, prop_cost, liquidity, semistatic, delayed");
  hedge->add_option("--param", h_param, "position or speed");
  hedge->add_option("--alpha", h_alpha, "trading cost intensity");
  hedge->add_option("--liquidity-bound", h_liq, "Euclidean bound on speed coefficients");
  hedge->add_option("--basket", h_basket, "SignaturePayoff JSON files for static positions");
  hedge->add_option("--beta-lower", h_lo, "lower bounds on static positions");
  hedge->add_option("--beta-upper", h_hi, "upper bounds on static positions");
  hedge->add_option("--prefix-path", h_prefix, "observed path CSV (time,v1) for delayed hedging");
  hedge->add_option("--p-t", h_pt, "capital at the delayed start (default: conditional model price)");
  hedge->add_flag("--truncate", h_truncate, "drop terms above the es order instead of failing");
  hedge->add_option("--out", h_out, "HedgeSolution JSON")->required();
  hedge->callback([&] {
    run.command = "hedge";
    const auto payoff = load_payoff(run, h_payoff);
    const auto esig = sh::es_from_json(run.read_json(h_es));
    sh::HedgeProblem pb;
    pb.risk = parse_risk(h_risk);
    pb.f = payoff.f;
    pb.M = h_M;
    pb.mode = sh::hedge_mode_from_string(h_mode);
    pb.param = sh::parametrization_from_string(h_param);
    pb.alpha = h_alpha;
    pb.liquidity_bound = h_liq;
    pb.truncate = h_truncate;
    for (const auto& b : h_basket) pb.basket.push_back(load_payoff(run, b).f);
    pb.beta_lower = h_lo;
    pb.beta_upper = h_hi;
    if (pb.mode == sh::HedgeMode::delayed) {
      if (h_prefix.empty()) throw sh::InputError("delayed mode needs --prefix-path");
      const auto path = sh::path_from_csv(run.read(h_prefix));
      if (path.dim() != 1) throw sh::InputError("prefix path must have one price column");
      pb.prefix = sh::leadlag_signature(sh::augment(path), esig.order()).tensor;
      pb.start_time = path.times().back();
      const auto joint = sh::tensor_product(pb.prefix, esig.tensor, esig.order());
      pb.p_t = h_pt ? *h_pt : sh::pair(pb.f, joint);
    }
    pb.p0 = h_p0 ? *h_p0 : sh::price_payoff(pb.f, esig);
    const auto sol = sh::solve(pb, esig);
    json j = sh::hedge_solution_to_json(sol);
    j["problem"] = {{"risk", pb.risk},   {"M", pb.M},         {"p0", pb.p0},
                    {"alpha", pb.alpha}, {"start_time", pb.start_time}, {"p_t", pb.p_t}};
    run.parameters = j["problem"];
    run.parameters["mode"] = h_mode;
    run.write(h_out, dump(j));
  });

  // backtest -------------------------------------------------------------
  auto* bt = app.add_subcommand("backtest", "run a hedge along test paths");
  std::string bt_sol, bt_payoff, bt_ens, bt_out, bt_summary;
  std::optional<double> bt_p0, bt_alpha;
  bool bt_functional = false;
  bt->add_option("--solution", bt_sol, "HedgeSolution JSON")->required();
  bt->add_option("--payoff", bt_payoff, "SignaturePayoff JSON")->required();
  bt->add_option("--ensemble", bt_ens, "test ensemble CSV")->required();
  bt->add_option("--p0", bt_p0, "override the initial capital");
  bt->add_option("--alpha", bt_alpha, "override the cost intensity");
  bt->add_flag("--use-functional", bt_functional, "settle against the signature functional, not the exact payoff");
  bt->add_option("--out", bt_out, "P&L CSV")->required();
  bt->add_option("--summary", bt_summary, "summary JSON (default: <out>.summary.json)");
  bt->callback([&] {
    run.command = "backtest";
    const json sj = run.read_json(bt_sol);
    const auto sol = sh::hedge_solution_from_json(sj);
    const auto payoff = load_payoff(run, bt_payoff);
    const auto e = sh::ensemble_from_csv(run.read(bt_ens));
    const json prob = sj.value("problem", json::object());
    sh::HedgeProblem pb;
    pb.mode = sol.mode;
    pb.p0 = bt_p0 ? *bt_p0 : prob.value("p0", 0.0);
    pb.alpha = bt_alpha ? *bt_alpha : prob.value("alpha", 0.0);
    pb.start_time = prob.value("start_time", 0.0);
    pb.p_t = prob.value("p_t", 0.0);
    const auto spec = bt_functional ? sh::PayoffSpec::custom(payoff.f) : payoff.spec;
    std::string csv = "path_id,time,position,cash,pnl\n";
    std::vector<double> terminal;
    for (std::size_t i = 0; i < e.n_paths; ++i) {
      const auto p = e.path_prices(i);
      const double F = sh::evaluate_payoff(spec, e.times, p);
      const auto r = sh::backtest_strategy(sol, pb, e.times, p, F);
      csv += sh::backtest_to_csv_rows(i, r);
      terminal.push_back(r.terminal_pnl);
    }
    const auto s = sh::summarize_pnl(terminal);
    const std::string summary_path = bt_summary.empty() ? bt_out + ".summary.json" : bt_summary;
    run.parameters = {{"p0", pb.p0}, {"alpha", pb.alpha}, {"settlement", bt_functional ? "functional" : "exact"}};
    sh::write_text_file(summary_path, dump({{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"p05", s.p05}, {"p95", s.p95}}));
    run.write(bt_out, csv, {summary_path});
  });

  // impliedsig -----------------------------------------------------------
  auto* imp = app.add_subcommand("impliedsig", "implied expected signature from quoted prices");
  std::string imp_quotes, imp_ens, imp_out, imp_report, imp_split = "none";
  int imp_order = 5;
  double imp_reg = 1e-10;
  std::optional<double> imp_T;
  imp->add_option("--quotes", imp_quotes, "quotes CSV")->required();
  imp->add_option("--ensemble", imp_ens, "ensemble CSV used for the payoff projections")->required();
  imp->add_option("--order", imp_order, "signature order")->check(CLI::Range(2, 8));
  imp->add_option("--reg", imp_reg, "ridge relative to the mean diagonal, 0 for minimum norm");
  imp->add_option("--T", imp_T, "maturity (default: ensemble horizon)");
  imp->add_option("--split", imp_split, "none, or alternate (odd rows held out)")
      ->check(CLI::IsMember({"none", "alternate"}));
  imp->add_option("--out", imp_out, "implied ExpectedSignature JSON")->required();
  imp->add_option("--report", imp_report, "R² report JSON (default: <out>.report.json)");
  imp->callback([&] {
    run.command = "impliedsig";
    auto quotes = sh::quotes_from_csv(run.read(imp_quotes));
    const auto e = sh::ensemble_from_csv(run.read(imp_ens));
    std::vector<sh::Quote> train, test;
    for (std::size_t i = 0; i < quotes.size(); ++i) (imp_split == "alternate" && i % 2 == 1 ? test : train).push_back(quotes[i]);
    const sh::SignatureDesign design(e, imp_order, std::nullopt, run.threads);
    const double T = imp_T ? *imp_T : e.horizon();
    const auto ies = sh::implied_expected_signature(train, design, T, imp_reg);
    const auto ptrain = sh::predict_prices(ies, train, design);
    json report{{"n_train", train.size()}, {"n_test", test.size()}, {"r2_train", sh::json_number_or_null(ptrain.r2)}};
    if (!test.empty()) {
      const auto ptest = sh::predict_prices(ies, test, design);
      report["r2_test"] = sh::json_number_or_null(ptest.r2);
    }
    const double Z = ies.es.tensor.coefficients()[0];
    report["discount_factor"] = Z;
    report["rate"] = Z > 0.0 ? json(-std::log(Z) / T) : json(nullptr);
    if (!ies.diagnostics.warning.empty()) report["warning"] = ies.diagnostics.warning;
    run.parameters = {{"order", imp_order}, {"reg", imp_reg}, {"T", T}, {"split", imp_split}};
    const std::string report_path = imp_report.empty() ? imp_out + ".report.json" : imp_report;
    sh::write_text_file(report_path, dump(report));
    run.write(imp_out, dump(sh::implied_to_json(ies)), {report_path});
    print_line(report.dump());
  });

  // price ----------------------------------------------------------------
  auto* price = app.add_subcommand("price", "pair a payoff functional with an expected signature");
  std::string pr_payoff, pr_es, pr_out;
  price->add_option("--payoff", pr_payoff, "SignaturePayoff or tensor JSON")->required();
  price->add_option("--es", pr_es, "ExpectedSignature JSON")->required();
  price->add_option("--out", pr_out, "optional JSON record");
  price->callback([&] {
    run.command = "price";
    const auto payoff = load_payoff(run, pr_payoff);
    const auto esig = sh::es_from_json(run.read_json(pr_es));
    const double v = sh::price_payoff(payoff.f, esig);
    print_line(sh::format_double(v));
    if (!pr_out.empty()) run.write(pr_out, dump({{"price", v}, {"discounted", esig.discounted}}));
  });

  // quotes ---------------------------------------------------------------
  auto* qt = app.add_subcommand("quotes", "synthetic quotes priced by discounted Monte Carlo");
  ModelOpts q_m;
  q_m.add(qt);
  int q_eu = 50, q_bar = 50, q_var = 50, q_asian = 0;
  std::string q_out;
  qt->add_option("--european", q_eu, "European calls and puts, strikes 0.8..1.2");
  qt->add_option("--barrier", q_bar, "up-and-out calls, K 0.8..1.1, B 1.15..1.5");
  qt->add_option("--varswap", q_var, "variance swaps, K_var 0.01..0.08");
  qt->add_option("--asian", q_asian, "Asian calls, strikes 0.8..1.2");
  qt->add_option("--out", q_out, "quotes CSV")->required();
  qt->callback([&] {
    run.command = "quotes";
    run.seed = q_m.seed;
    run.parameters = q_m.to_json();
    run.parameters["counts"] = {{"european", q_eu}, {"barrier", q_bar}, {"varswap", q_var}, {"asian", q_asian}};
    const auto model = q_m.spec();
    const auto e = sh::sample_paths(model, q_m.T, q_m.steps, q_m.paths, q_m.seed, run.threads);
    auto quotes = sh::synthetic_quote_menu(q_eu, q_bar, q_var, q_asian);
    sh::price_quotes_mc(quotes, e, std::exp(-model.rate * q_m.T));
    run.write(q_out, sh::quotes_to_csv(quotes));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("usage", e.what(), kUsage);
    return kUsage;
  } catch (const sh::Error& e) {
    const int code = exit_code(e.kind());
    error_record(sh::to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    error_record("internal", e.what(), 1);
    return 1;
  }
  return kOk;
}
