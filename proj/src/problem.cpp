#include "fracbvp/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracbvp/errors.hpp"
#include "fracbvp/parallel.hpp"

namespace fracbvp {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value))
    throw ConfigError(where + ": '" + text + "' is not a finite number");
  return value;
}

VectorXd parse_vector(const std::string& text, const std::string& where) {
  const auto parts = split(text, ',');
  VectorXd v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Index>(i)] = parse_number(parts[i], where);
  return v;
}

class Sections {
 public:
  explicit Sections(const pt::ptree& tree) : tree_(tree) {
    static const std::map<std::string, std::set<std::string>> allowed{
        {"problem", {"p", "T", "alpha1", "alpha2", "N", "beta_basis", "enforce_domain"}},
        {"domain", {"lo", "hi"}},
        {"rhs", {"expr", "constants"}},
        {"omega_box", {"lo", "hi"}},
        {"bounds", {"M", "K"}},
    };
    for (const auto& [section, body] : tree) {
      const auto it = allowed.find(section);
      if (it == allowed.end()) {
        if (body.empty()) throw ConfigError("key '" + section + "' appears outside any section");
        throw ConfigError("unknown section [" + section + "]");
      }
      for (const auto& [key, value] : body)
        if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    return trim(*value);
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto value = get(section, key);
    if (!value) throw ConfigError("missing field '" + key + "' in [" + section + "]");
    if (value->empty()) throw ConfigError("empty field '" + key + "' in [" + section + "]");
    return *value;
  }

 private:
  const pt::ptree& tree_;
};

expr::Constants parse_constants(const std::string& text) {
  expr::Constants out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("[rhs] constants: expected 'name: value', got '" + item + "'");
    const std::string name = trim(std::string_view(item).substr(0, colon));
    if (name.empty()) throw ConfigError("[rhs] constants: empty constant name");
    if (out.contains(name)) throw ConfigError("[rhs] constants: duplicate constant '" + name + "'");
    out[name] = parse_number(trim(std::string_view(item).substr(colon + 1)), "[rhs] constants." + name);
  }
  return out;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(where + ": expected true or false, got '" + text + "'");
}

const char* const kAccGyre = R"([problem]
p = 1.5
T = 1
alpha1 = 1
alpha2 = 2
N = 401
beta_basis = normalized
enforce_domain = false

[domain]
lo = 1
hi = 2

[rhs]
expr = -2*exp(t)/(1+exp(t))^2 * u1 - 2*omega*exp(t)*(1-exp(t))/(1+exp(t))^3
constants = omega: 4649.56

[omega_box]
lo = -333
hi = -320

[bounds]
M = 844.11
K = 0.5
)";

const char* const kZeroRhs = R"([problem]
p = 1.5
T = 1
alpha1 = 1
alpha2 = 2
N = 401

[domain]
lo = 0
hi = 3

[rhs]
expr = 0

[omega_box]
lo = 0
hi = 2
)";

}  // namespace

void Problem::validate() const {
  const Index n = dim();
  if (!(p > 1.0 && p <= 2.0)) throw ConfigError("invariant violated: p outside (1,2]");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("invariant violated: T must be finite and > 0");
  if (n < 1) throw ConfigError("invariant violated: alpha1 must have at least one component");
  if (alpha2.size() != n) throw ConfigError("invariant violated: alpha2 must have " + std::to_string(n) + " components");
  if (domain.lo.size() != n || domain.hi.size() != n)
    throw ConfigError("invariant violated: domain lo/hi must have " + std::to_string(n) + " components");
  for (Index i = 0; i < n; ++i)
    if (!(domain.lo[i] < domain.hi[i]))
      throw ConfigError("invariant violated: domain lo < hi fails for component " + std::to_string(i + 1));
  if (!domain.contains(alpha1)) throw ConfigError("invariant violated: alpha1 outside domain D");
  if (!domain.contains(alpha2)) throw ConfigError("invariant violated: alpha2 outside domain D");
  if (omega.lo.size() != n || omega.hi.size() != n)
    throw ConfigError("invariant violated: omega_box lo/hi must have " + std::to_string(n) + " components");
  for (Index i = 0; i < n; ++i)
    if (!(omega.lo[i] < omega.hi[i]))
      throw ConfigError("invariant violated: Omega is empty (lo < hi fails for component " + std::to_string(i + 1) + ")");
  if (static_cast<Index>(f.size()) != n) throw ConfigError("invariant violated: rhs must have one expression per component");
  if (M.size() != n) throw ConfigError("invariant violated: M must have " + std::to_string(n) + " components");
  if ((M.array() < 0.0).any()) throw ConfigError("invariant violated: M entries must be >= 0");
  if (K.rows() != n || K.cols() != n)
    throw ConfigError("invariant violated: K must be " + std::to_string(n) + "x" + std::to_string(n));
  if ((K.array() < 0.0).any()) throw ConfigError("invariant violated: K entries must be >= 0");
  if (N < 5) throw ConfigError("invariant violated: N must be >= 5");
}

ParameterPoint make_parameter_point(const Problem& prob, const VectorXd& chi1) {
  if (chi1.size() != prob.dim()) throw SizeError("chi1 has the wrong number of components");
  if (!chi1.allFinite()) throw DomainError("chi1 entries must be finite");
  return {chi1, prob.omega.contains(chi1)};
}

BoundEstimate estimate_bounds(const Problem& prob, const BoundSampling& sampling) {
  const Index n = prob.dim();
  const bool lattice = n <= 2;
  const int per_axis = sampling.per_axis;
  if (lattice && per_axis < 2) throw DomainError("estimate_bounds: need at least 2 points per axis");

  Index count = 0;
  if (lattice) {
    count = 1;
    for (Index d = 0; d <= n; ++d) count *= per_axis;
  } else {
    count = sampling.lhs_points;
  }
  if (count < 1000) throw DomainError("estimate_bounds: at least 1000 samples required");

  const double T = prob.T;
  const VectorXd& lo = prob.domain.lo;
  const VectorXd& hi = prob.domain.hi;

  // Sample coordinates in [0,1]^(n+1), axis 0 is time.
  std::vector<VectorXd> lhs;
  if (!lattice) {
    std::mt19937_64 rng(sampling.seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<std::vector<Index>> perms(static_cast<std::size_t>(n + 1));
    for (auto& perm : perms) {
      perm.resize(static_cast<std::size_t>(count));
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
    }
    lhs.assign(static_cast<std::size_t>(count), VectorXd(n + 1));
    for (Index i = 0; i < count; ++i)
      for (Index d = 0; d <= n; ++d)
        lhs[static_cast<std::size_t>(i)][d] =
            (static_cast<double>(perms[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)]) + jitter(rng)) /
            static_cast<double>(count);
  }

  auto coordinate = [&](Index i) {
    VectorXd unit(n + 1);
    if (lattice) {
      Index rest = i;
      for (Index d = 0; d <= n; ++d) {
        unit[d] = static_cast<double>(rest % per_axis) / static_cast<double>(per_axis - 1);
        rest /= per_axis;
      }
    } else {
      unit = lhs[static_cast<std::size_t>(i)];
    }
    return unit;
  };

  const VectorXd step = 1e-4 * (hi - lo);
  const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(count), 64);
  std::vector<VectorXd> sup(chunks, VectorXd::Zero(n));
  std::vector<MatrixXd> lip(chunks, MatrixXd::Zero(n, n));

  parallel_for(chunks, [&](std::size_t c) {
    const Index begin = count * static_cast<Index>(c) / static_cast<Index>(chunks);
    const Index end = count * static_cast<Index>(c + 1) / static_cast<Index>(chunks);
    for (Index i = begin; i < end; ++i) {
      const VectorXd unit = coordinate(i);
      const double t = unit[0] * T;
      VectorXd u = lo + unit.tail(n).cwiseProduct(hi - lo);
      sup[c] = sup[c].cwiseMax(prob.rhs(t, u).cwiseAbs());
      for (Index j = 0; j < n; ++j) {
        const double a = std::max(u[j] - step[j], lo[j]);
        const double b = std::min(u[j] + step[j], hi[j]);
        VectorXd ua = u, ub = u;
        ua[j] = a;
        ub[j] = b;
        const VectorXd slope = (prob.rhs(t, ub) - prob.rhs(t, ua)) / (b - a);
        lip[c].col(j) = lip[c].col(j).cwiseMax(slope.cwiseAbs());
      }
    }
  });

  BoundEstimate est;
  est.samples = count;
  est.sampled_sup = VectorXd::Zero(n);
  est.sampled_lipschitz = MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < chunks; ++c) {
    est.sampled_sup = est.sampled_sup.cwiseMax(sup[c]);
    est.sampled_lipschitz = est.sampled_lipschitz.cwiseMax(lip[c]);
  }
  est.M = sampling.inflation * est.sampled_sup;
  est.K = sampling.inflation * est.sampled_lipschitz;
  return est;
}

Problem parse_problem(std::string_view text, const LoadOptions& options) {
  pt::ptree tree;
  {
    std::istringstream in{std::string(text)};
    try {
      pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
    }
  }
  const Sections cfg(tree);

  Problem prob;
  prob.p = parse_number(cfg.require("problem", "p"), "[problem] p");
  prob.T = parse_number(cfg.require("problem", "T"), "[problem] T");
  prob.alpha1 = parse_vector(cfg.require("problem", "alpha1"), "[problem] alpha1");
  prob.alpha2 = parse_vector(cfg.require("problem", "alpha2"), "[problem] alpha2");
  if (auto n = cfg.get("problem", "N")) {
    const double v = parse_number(*n, "[problem] N");
    if (v != std::floor(v) || v < 0 || v > 1e7) throw ConfigError("[problem] N must be a non-negative integer");
    prob.N = static_cast<Index>(v);
  }
  if (options.grid_n) prob.N = *options.grid_n;
  if (auto basis = cfg.get("problem", "beta_basis")) {
    if (*basis == "raw") prob.beta_basis = BetaBasis::Raw;
    else if (*basis == "normalized") prob.beta_basis = BetaBasis::Normalized;
    else throw ConfigError("[problem] beta_basis must be 'raw' or 'normalized'");
  }
  if (auto enforce = cfg.get("problem", "enforce_domain"))
    prob.enforce_domain = parse_bool(*enforce, "[problem] enforce_domain");

  prob.domain = {parse_vector(cfg.require("domain", "lo"), "[domain] lo"),
                 parse_vector(cfg.require("domain", "hi"), "[domain] hi")};
  prob.omega = {parse_vector(cfg.require("omega_box", "lo"), "[omega_box] lo"),
                parse_vector(cfg.require("omega_box", "hi"), "[omega_box] hi")};

  prob.rhs_source = cfg.require("rhs", "expr");
  prob.constants = parse_constants(cfg.get("rhs", "constants").value_or(""));
  const Index n = prob.alpha1.size();
  try {
    prob.f = expr::parse(prob.rhs_source, static_cast<int>(n), prob.constants);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("[rhs] expr: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("[rhs] constants: ") + e.what());
  }

  const auto m_text = cfg.get("bounds", "M");
  const auto k_text = cfg.get("bounds", "K");
  if (m_text) prob.M = parse_vector(*m_text, "[bounds] M");
  if (k_text) {
    const VectorXd flat = parse_vector(*k_text, "[bounds] K");
    if (flat.size() != n * n)
      throw ConfigError("[bounds] K must list " + std::to_string(n * n) + " entries (row-major)");
    prob.K = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), n, n);
  }

  // Shapes must be sane before sampling f over D.
  prob.M = m_text ? prob.M : VectorXd::Zero(n);
  prob.K = k_text ? prob.K : MatrixXd::Zero(n, n);
  prob.validate();

  if (!m_text || !k_text) {
    const BoundEstimate est = estimate_bounds(prob, options.sampling);
    if (!m_text) prob.M = est.M;
    if (!k_text) prob.K = est.K;
    prob.bounds_estimated = true;
  }
  return prob;
}

Problem load_problem(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_problem(text.str(), options);
}

std::vector<std::string> builtin_names() { return {"acc-gyre", "zero-rhs"}; }

std::string builtin_config(std::string_view name) {
  if (name == "acc-gyre") return kAccGyre;
  if (name == "zero-rhs") return kZeroRhs;
  throw ConfigError("unknown builtin problem '" + std::string(name) + "'");
}

Problem load_builtin(std::string_view name, const LoadOptions& options) {
  return parse_problem(builtin_config(name), options);
}

}  // namespace fracbvp
