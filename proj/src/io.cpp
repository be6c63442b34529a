#include "hierint/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hierint {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& cell, const std::string& path, int row) {
  std::string t = trim(cell);
  double v;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw DataError(path + ": non-numeric value '" + cell + "' in data row " +
                    std::to_string(row));
  return v;
}

}  // namespace

Dataset read_dataset(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  int y_col = -1;
  if (!response.empty()) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == response) y_col = static_cast<int>(i);
    if (y_col < 0) throw DataError(path + ": no column named '" + response + "'");
  }

  std::vector<std::vector<double>> rows;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) vals[i] = parse_cell(cells[i], path, row_no);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  int p = static_cast<int>(header.size()) - (y_col >= 0 ? 1 : 0);
  if (p < 1) throw DataError(path + ": no predictor columns");

  Dataset ds;
  ds.x.resize(static_cast<int>(rows.size()), p);
  if (y_col >= 0) ds.y.resize(static_cast<int>(rows.size()));
  for (size_t i = 0; i < header.size(); ++i)
    if (static_cast<int>(i) != y_col) ds.names.push_back(header[i]);
  for (size_t r = 0; r < rows.size(); ++r) {
    int c = 0;
    for (size_t i = 0; i < rows[r].size(); ++i) {
      if (static_cast<int>(i) == y_col)
        ds.y[static_cast<int>(r)] = rows[r][i];
      else
        ds.x(static_cast<int>(r), c++) = rows[r][i];
    }
  }
  return ds;
}

void write_dataset_csv(std::ostream& os, const Mat& x, const std::vector<std::string>& names,
                       const Vec* y, const std::string& response_name) {
  if (static_cast<int>(names.size()) != x.cols())
    throw DomainError("write_dataset_csv: name count does not match columns");
  for (size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  if (y) os << "," << response_name;
  os << "\n";
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) os << (c ? "," : "") << format_double(x(r, c));
    if (y) os << "," << format_double((*y)[r]);
    os << "\n";
  }
}

std::vector<std::string> expanded_column_names(const std::vector<std::string>& main_names) {
  InteractionIndex idx(static_cast<int>(main_names.size()));
  std::vector<std::string> out(main_names);
  for (int c = idx.p(); c < idx.p1(); ++c) {
    auto [j, k] = idx.column_to_pair(c);
    out.push_back(main_names[j] + ":" + main_names[k]);
  }
  return out;
}

std::string rate_csv_header() { return "penalty,n,p,s,rep,l1_error,pe_error,predicted,seed"; }

void write_rate_rows(std::ostream& os, const std::vector<RateRow>& rows) {
  os << rate_csv_header() << "\n";
  for (const auto& r : rows) {
    os << r.penalty << "," << r.n << "," << r.p << "," << r.s << "," << r.rep << ","
       << format_double(r.l1_error) << "," << format_double(r.pe_error) << ","
       << format_double(r.predicted) << "," << r.seed << "\n";
  }
}

namespace {

std::string family_name(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::Lasso: return "lasso";
    case PenaltyFamily::Cap: return "cap";
    case PenaltyFamily::BienMaxL1: return "bien";
    case PenaltyFamily::PairwiseGroup: return "pairwise";
    case PenaltyFamily::ContiguousBlock: return "block";
    case PenaltyFamily::Nested: return "nested";
  }
  return "?";
}

}  // namespace

nlohmann::json penalty_to_json(const PenaltySpec& spec) {
  // JSON has no literal for infinity, so an unbounded exponent is stored as
  // the string "inf"; penalty_from_json accepts either form.
  nlohmann::json q = std::isinf(spec.q) ? nlohmann::json("inf") : nlohmann::json(spec.q);
  return {{"family", family_name(spec.family)}, {"q", q}, {"d0", spec.d0}};
}

PenaltySpec penalty_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw DataError("penalty JSON needs a 'family' field");
  std::ostringstream text;
  text << j.at("family").get<std::string>();
  bool first = true;
  if (j.contains("q")) {
    const auto& qj = j.at("q");
    text << (first ? ":" : ",") << "q=";
    if (qj.is_string()) {
      text << qj.get<std::string>();
    } else if (qj.is_number()) {
      double q = qj.get<double>();
      text << (std::isinf(q) ? "inf" : format_double(q));
    } else {
      throw DataError("penalty JSON: 'q' must be a number or \"inf\"");
    }
    first = false;
  }
  if (j.contains("d0")) text << (first ? ":" : ",") << "d0=" << j.at("d0").get<int>();
  return PenaltySpec::parse(text.str());
}

nlohmann::json fit_to_json(const FitResult& fit, const PenaltySpec& spec,
                           const InteractionIndex& idx) {
  nlohmann::json j;
  j["penalty"] = penalty_to_json(spec);
  j["lambda"] = fit.lambda;
  j["objective"] = fit.objective;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["primal_residual"] = fit.primal_residual;
  j["dual_residual"] = fit.dual_residual;
  j["p"] = idx.p();
  j["p1"] = idx.p1();
  j["theta"] = std::vector<double>(fit.theta.data(), fit.theta.data() + fit.theta.size());
  nlohmann::json support;
  support["main"] = std::vector<int>(fit.support.main.begin(), fit.support.main.end());
  auto pairs = nlohmann::json::array();
  for (const auto& [a, b] : fit.support.pairs) pairs.push_back({a, b});
  support["pairs"] = pairs;
  j["support"] = support;
  j["support_threshold"] = fit.support_threshold_used;
  return j;
}

nlohmann::json rate_summaries_to_json(const RateResult& result, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["design"] = cfg.dist.label();
  j["lambda"] = cfg.lambda_fixed ? nlohmann::json(*cfg.lambda_fixed)
                                 : nlohmann::json({{"multiplier", cfg.lambda_multiplier}});
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  auto arr = nlohmann::json::array();
  for (const auto& s : result.summaries) {
    arr.push_back({{"penalty", s.penalty},
                   {"slope", s.slope},
                   {"slope_se", s.slope_se},
                   {"r2", s.r2},
                   {"cells", s.cells},
                   {"nonconverged", s.nonconverged}});
  }
  j["summaries"] = arr;
  return j;
}

namespace {

nlohmann::json parse_toml_scalar(const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) throw DataError("toml: empty value");
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') throw DataError("toml: unterminated string " + t);
    return t.substr(1, t.size() - 2);
  }
  if (t == "true") return true;
  if (t == "false") return false;
  // Integers stay integral so list-of-int fields round-trip.
  if (t.find_first_of(".eE") == std::string::npos) {
    long long v;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec == std::errc() && res.ptr == t.data() + t.size()) return v;
  }
  double v;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw DataError("toml: cannot parse value '" + t + "'");
  return v;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

}  // namespace

nlohmann::json parse_toml(std::istream& is) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw DataError("toml: bad section header at line " +
                                           std::to_string(line_no));
      std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty()) throw DataError("toml: empty section name at line " +
                                        std::to_string(line_no));
      root[name] = nlohmann::json::object();
      table = &root[name];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError("toml: expected key = value at line " + std::to_string(line_no));
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw DataError("toml: empty key at line " + std::to_string(line_no));
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']')
        throw DataError("toml: arrays must close on one line (line " +
                        std::to_string(line_no) + ")");
      auto arr = nlohmann::json::array();
      std::string body = val.substr(1, val.size() - 2);
      std::string item;
      bool in_str = false;
      for (char c : body) {
        if (c == '"') in_str = !in_str;
        if (c == ',' && !in_str) {
          if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item));
          item.clear();
        } else {
          item += c;
        }
      }
      if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item));
      (*table)[key] = arr;
    } else {
      (*table)[key] = parse_toml_scalar(val);
    }
  }
  return root;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") return parse_toml(in);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

namespace {

template <typename T>
std::vector<T> int_list(const nlohmann::json& j, const std::string& key) {
  std::vector<T> out;
  for (const auto& v : j.at(key)) out.push_back(v.get<T>());
  return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("design")) {
      const auto& d = j.at("design");
      if (d.contains("kind"))
        cfg.dist.kind = DesignDistribution::parse_kind(d.at("kind").get<std::string>());
      if (d.contains("cov"))
        cfg.dist.cov = CovarianceSpec::parse(d.at("cov").get<std::string>());
    }
    if (j.contains("p")) cfg.p_list = int_list<int>(j, "p");
    if (j.contains("s_main")) cfg.s_main_list = int_list<int>(j, "s_main");
    if (j.contains("s_int")) cfg.s_int_list = int_list<int>(j, "s_int");
    if (j.contains("n")) cfg.n_list = int_list<int>(j, "n");
    if (j.contains("penalties")) {
      cfg.penalties.clear();
      for (const auto& s : j.at("penalties"))
        cfg.penalties.push_back(PenaltySpec::parse(s.get<std::string>()));
    }
    if (j.contains("lambda_multiplier"))
      cfg.lambda_multiplier = j.at("lambda_multiplier").get<double>();
    if (j.contains("lambda_fixed")) cfg.lambda_fixed = j.at("lambda_fixed").get<double>();
    if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
    if (j.contains("magnitude")) cfg.magnitude = j.at("magnitude").get<double>();
    if (j.contains("noise_sd")) cfg.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("noise")) {
      std::string n = j.at("noise").get<std::string>();
      if (n == "gaussian")
        cfg.noise = NoiseKind::Gaussian;
      else if (n == "rademacher")
        cfg.noise = NoiseKind::Rademacher;
      else
        throw DataError("unknown noise kind '" + n + "'");
    }
    if (j.contains("theory")) {
      const auto& t = j.at("theory");
      if (t.contains("noise_psi2")) cfg.tc.noise_psi2 = t.at("noise_psi2").get<double>();
      if (t.contains("design_psi2")) cfg.tc.design_psi2 = t.at("design_psi2").get<double>();
      if (t.contains("col_sd")) cfg.tc.max_col_sd = t.at("col_sd").get<double>();
      if (t.contains("delta")) cfg.tc.delta = t.at("delta").get<double>();
      if (t.contains("eta0")) cfg.tc.eta0 = t.at("eta0").get<double>();
      if (t.contains("abs_const")) cfg.tc.abs_const = t.at("abs_const").get<double>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("experiment config: ") + e.what());
  }
  return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace hierint
