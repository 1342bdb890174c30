#pragma once

// JSON and CSV forms of the library's data types.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "sighedge/errors.hpp"
#include "sighedge/hedging.hpp"
#include "sighedge/implied.hpp"
#include "sighedge/market.hpp"
#include "sighedge/payoffs.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

using json = nlohmann::json;

// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (b < e && blank(*b)) ++b;
  while (e > b && blank(e[-1])) --e;
  double v = 0.0;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw InputError("cannot parse " + what + " '" + s + "' as a number");
  return v;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline double json_number(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

inline json json_number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Tensors

inline json tensor_to_json(const FreeTensor& t) {
  json levels = json::array();
  for (int k = 0; k <= t.order(); ++k) {
    const auto lv = t.level(k);
    levels.push_back(std::vector<double>(lv.begin(), lv.end()));
  }
  return {{"dimension", t.dimension()}, {"order", t.order()}, {"levels", std::move(levels)}};
}

inline FreeTensor tensor_from_json(const json& j) {
  try {
    const int d = j.at("dimension").get<int>();
    const int N = j.at("order").get<int>();
    const auto levels = j.at("levels").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(levels.size()) != N + 1)
      throw InputError("tensor JSON has " + std::to_string(levels.size()) + " levels but order " + std::to_string(N));
    if (d < 1) throw InputError("tensor JSON dimension must be >= 1");
    return FreeTensor::from_levels(d, levels);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed tensor JSON: ") + e.what());
  }
}

inline json letters_to_json(LetterSet set) {
  json a = json::array();
  for (int l = 1; l <= kLeadLagDim; ++l)
    if (set >> (l - 1) & 1U) a.push_back(l);
  return a;
}

inline LetterSet letters_from_json(const json& a) {
  LetterSet s = 0;
  for (const auto& v : a) {
    const int l = v.get<int>();
    if (l < 1 || l > kLeadLagDim) throw InputError("letter out of range in letter list");
    s |= LetterSet{1} << (l - 1);
  }
  return s;
}

inline json es_to_json(const ExpectedSignature& es) {
  json j = tensor_to_json(es.tensor);
  j["n_paths"] = es.n_paths;
  j["seed"] = es.seed;
  j["T"] = es.T;
  j["discounted"] = es.discounted;
  j["rate"] = es.rate;
  j["letters"] = letters_to_json(es.letters);
  j["standard_errors"] = tensor_to_json(es.standard_errors)["levels"];
  return j;
}

inline ExpectedSignature es_from_json(const json& j) {
  ExpectedSignature es;
  es.tensor = tensor_from_json(j);
  try {
    es.n_paths = j.value("n_paths", std::size_t{0});
    es.seed = j.value("seed", std::uint64_t{0});
    es.T = j.at("T").get<double>();
    es.discounted = j.value("discounted", false);
    es.rate = j.value("rate", 0.0);
    es.letters = j.contains("letters") ? letters_from_json(j["letters"]) : all_letters(kLeadLagDim);
    if (j.contains("standard_errors"))
      es.standard_errors = tensor_from_json(
          {{"dimension", es.tensor.dimension()}, {"order", es.tensor.order()}, {"levels", j["standard_errors"]}});
    else
      es.standard_errors = FreeTensor(es.tensor.dimension(), es.tensor.order());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed expected signature JSON: ") + e.what());
  }
  if (es.tensor.dimension() != kLeadLagDim) throw InputError("expected signature must be over 4 letters");
  return es;
}

// ---------------------------------------------------------------------------
// Payoffs

// Kind-specific parameters, as carried in the quotes file.
inline json payoff_params_to_json(const PayoffSpec& s) {
  switch (s.kind) {
    case PayoffKind::forward:
    case PayoffKind::european_call:
    case PayoffKind::european_put:
    case PayoffKind::asian_call: return {{"K", s.strike}};
    case PayoffKind::barrier_up_out_call: return {{"K", s.strike}, {"B", s.barrier}};
    case PayoffKind::lookback_call_float: return json::object();
    case PayoffKind::variance_swap: return {{"K_var", s.strike}};
    case PayoffKind::custom_signature: return {{"functional", tensor_to_json(s.functional)}};
  }
  return json::object();
}

inline PayoffSpec payoff_from_params(PayoffKind kind, const json& params) {
  PayoffSpec s;
  s.kind = kind;
  try {
    switch (kind) {
      case PayoffKind::forward:
      case PayoffKind::european_call:
      case PayoffKind::european_put:
      case PayoffKind::asian_call: s.strike = params.at("K").get<double>(); break;
      case PayoffKind::barrier_up_out_call:
        s.strike = params.at("K").get<double>();
        s.barrier = params.at("B").get<double>();
        break;
      case PayoffKind::lookback_call_float: break;
      case PayoffKind::variance_swap: s.strike = params.value("K_var", 0.0); break;
      case PayoffKind::custom_signature: s.functional = tensor_from_json(params.at("functional")); break;
    }
  } catch (const json::exception& e) {
    throw InputError("missing payoff parameter for " + to_string(kind) + ": " + e.what());
  }
  return s;
}

inline json payoff_spec_to_json(const PayoffSpec& s) {
  return {{"kind", to_string(s.kind)}, {"params", payoff_params_to_json(s)}};
}

inline PayoffSpec payoff_spec_from_json(const json& j) {
  try {
    return payoff_from_params(payoff_kind_from_string(j.at("kind").get<std::string>()),
                              j.value("params", json::object()));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed payoff spec: ") + e.what());
  }
}

inline json signature_payoff_to_json(const SignaturePayoff& p) {
  json j = tensor_to_json(p.f);
  j["diagnostics"] = {{"r2", json_number_or_null(p.diagnostics.r2)},
                      {"residual_norm", p.diagnostics.residual_norm},
                      {"ridge", p.diagnostics.ridge},
                      {"n_paths", p.diagnostics.n_paths}};
  j["spec"] = payoff_spec_to_json(p.spec);
  return j;
}

inline SignaturePayoff signature_payoff_from_json(const json& j) {
  SignaturePayoff p;
  p.f = tensor_from_json(j);
  if (p.f.dimension() != kLeadLagDim) throw InputError("signature payoff must be over 4 letters");
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    p.diagnostics.r2 = json_number(d.value("r2", json(nullptr)));
    p.diagnostics.residual_norm = d.value("residual_norm", 0.0);
    p.diagnostics.ridge = d.value("ridge", 0.0);
    p.diagnostics.n_paths = d.value("n_paths", std::size_t{0});
  }
  p.spec = j.contains("spec") ? payoff_spec_from_json(j["spec"]) : PayoffSpec::custom(p.f);
  return p;
}

// ---------------------------------------------------------------------------
// Hedging

inline json hedge_solution_to_json(const HedgeSolution& s) {
  json j = tensor_to_json(s.strategy);
  j["objective"] = s.objective;
  j["mode"] = to_string(s.mode);
  j["param"] = to_string(s.param);
  j["beta"] = s.beta;
  j["required_es_order"] = s.required_es_order;
  j["constraint_binding"] = s.constraint_binding;
  return j;
}

inline HedgeSolution hedge_solution_from_json(const json& j) {
  HedgeSolution s;
  s.strategy = tensor_from_json(j);
  if (s.strategy.dimension() != 2) throw InputError("hedge strategy must be over 2 letters");
  try {
    s.objective = j.at("objective").get<double>();
    s.mode = hedge_mode_from_string(j.value("mode", std::string("plain")));
    s.param = parametrization_from_string(j.value("param", std::string("position")));
    s.beta = j.value("beta", std::vector<double>{});
    s.required_es_order = j.value("required_es_order", 0);
    s.constraint_binding = j.value("constraint_binding", false);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed hedge solution JSON: ") + e.what());
  }
  return s;
}

inline json implied_to_json(const ImpliedExpectedSignature& ies) {
  json j = es_to_json(ies.es);
  const auto& d = ies.diagnostics;
  j["diagnostics"] = {{"train_residual", d.train_residual},
                      {"regularization", d.regularization},
                      {"rank", d.rank},
                      {"rank_deficient", d.rank_deficient},
                      {"time_words_constrained", d.time_words_constrained},
                      {"n_quotes", d.n_quotes},
                      {"warning", d.warning}};
  return j;
}

// ---------------------------------------------------------------------------
// CSV

// Splits one CSV record; fields may be double-quoted with "" as an escape.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw InputError("unterminated quoted CSV field");
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& text, const std::vector<std::string>& header,
                                                      bool prefix_header = false) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV");
  const auto got = split_csv_line(line);
  const bool ok = prefix_header ? got.size() >= header.size() && std::equal(header.begin(), header.end(), got.begin())
                                : got == header;
  if (!ok) throw InputError("unexpected CSV header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != got.size()) throw InputError("CSV row has " + std::to_string(f.size()) + " fields, expected " +
                                                 std::to_string(got.size()));
    rows.push_back(std::move(f));
  }
  return rows;
}

inline std::string ensemble_to_csv(const PathEnsemble& e) {
  std::string out = "path_id,time,price\n";
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    const auto p = e.path_prices(i);
    for (std::size_t k = 0; k < e.n_samples(); ++k) {
      out += std::to_string(i);
      out += ',';
      out += format_double(e.times[k]);
      out += ',';
      out += format_double(p[k]);
      out += '\n';
    }
  }
  return out;
}

// Paths must appear contiguously, ids 0..n-1 in order, all on one grid.
inline PathEnsemble ensemble_from_csv(const std::string& text) {
  const auto rows = read_csv(text, {"path_id", "time", "price"});
  if (rows.empty()) throw InputError("ensemble CSV has no rows");
  PathEnsemble e;
  long long current = -1;
  std::size_t k = 0;
  for (const auto& r : rows) {
    const long long id = static_cast<long long>(parse_double(r[0], "path_id"));
    const double t = parse_double(r[1], "time");
    const double x = parse_double(r[2], "price");
    if (id != current) {
      if (id != current + 1) throw InputError("ensemble CSV path ids must be contiguous from 0");
      if (current >= 0 && k != e.times.size()) throw InputError("ensemble paths have different lengths");
      current = id;
      k = 0;
      ++e.n_paths;
    }
    if (current == 0) {
      e.times.push_back(t);
    } else {
      if (k >= e.times.size() || std::abs(e.times[k] - t) > 1e-12 * std::max(1.0, std::abs(t)))
        throw InputError("ensemble paths do not share a time grid");
    }
    e.prices.push_back(x);
    ++k;
  }
  if (k != e.times.size()) throw InputError("ensemble paths have different lengths");
  e.validate();
  return e;
}

inline DiscretePath path_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty path CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time") throw InputError("path CSV header must be time,v1[,v2...]");
  const int dim = static_cast<int>(header.size()) - 1;
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != dim + 1) throw InputError("path CSV row has the wrong number of fields");
    times.push_back(parse_double(f[0], "time"));
    for (int c = 0; c < dim; ++c) values.push_back(parse_double(f[static_cast<std::size_t>(c) + 1], "value"));
  }
  return DiscretePath(std::move(times), std::move(values), dim);
}

inline std::string quotes_to_csv(const std::vector<Quote>& quotes) {
  std::string out = "payoff_id,kind,params_json,price\n";
  for (const auto& q : quotes) {
    out += q.id + ',' + to_string(q.spec.kind) + ',' + csv_quote(payoff_params_to_json(q.spec).dump()) + ',' +
           format_double(q.price) + '\n';
  }
  return out;
}

inline std::vector<Quote> quotes_from_csv(const std::string& text) {
  const auto rows = read_csv(text, {"payoff_id", "kind", "params_json", "price"});
  std::vector<Quote> out;
  for (const auto& r : rows) {
    Quote q;
    q.id = r[0];
    json params;
    try {
      params = json::parse(r[2].empty() ? std::string("{}") : r[2]);
    } catch (const json::parse_error& e) {
      throw InputError("quote '" + q.id + "' has invalid params_json: " + e.what());
    }
    q.spec = payoff_from_params(payoff_kind_from_string(r[1]), params);
    q.price = parse_double(r[3], "price");
    out.push_back(std::move(q));
  }
  return out;
}

inline std::string backtest_to_csv_rows(std::size_t path_id, const BacktestResult& r) {
  std::string out;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    out += std::to_string(path_id) + ',' + format_double(r.times[k]) + ',' + format_double(r.positions[k]) + ',' +
           format_double(r.cash[k]) + ',' + format_double(r.pnl[k]) + '\n';
  }
  return out;
}

}  // namespace sighedge
