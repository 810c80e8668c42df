#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <regex>

#include "eaglass/disorder.hpp"
#include "eaglass/error.hpp"
#include "eaglass/exactsolve.hpp"
#include "eaglass/harness.hpp"

namespace eaglass::harness {

namespace {

constexpr std::pair<Kind, std::string_view> kKinds[] = {
    {Kind::Fe, "fe"},
    {Kind::DomainWall, "domain-wall"},
    {Kind::Ensemble, "ensemble"},
    {Kind::Martingale, "martingale"},
    {Kind::EdgeMartingale, "edge-martingale"},
    {Kind::Bounds, "bounds"},
    {Kind::Mgf, "mgf"},
    {Kind::Probe, "probe"},
    {Kind::Scaling, "scaling"},
    {Kind::Covariance, "covariance"},
    {Kind::OracleVerify, "oracle-verify"},
};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) fail(field, why);
}

Region cube(int dim, int side) { return Region::open_box(std::vector<int>(static_cast<std::size_t>(dim), side)); }

void check_bc(const std::string& field, const std::string& text, const Region& box) {
  try {
    BoundaryCondition::parse(text, box);
  } catch (const Error& e) {
    fail(field, e.what());
  }
}

}  // namespace

std::string_view to_string(Kind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

Kind kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKinds) {
    if (name == s) return kind;
  }
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  require(schema == kSchemaVersion, "schema", "expected " + std::to_string(kSchemaVersion));
  require(std::regex_match(id, std::regex("[A-Za-z0-9_.-]+")), "id", "must be a non-empty [A-Za-z0-9_.-] name");
  require(dim >= 1 && dim <= kMaxDim, "dim", "must be in [1, " + std::to_string(kMaxDim) + "]");
  require(window >= 1, "window", "must be >= 1");
  require(margin >= 1, "margin", "must be >= 1");
  require(block >= 1, "block", "must be >= 1");
  require(static_cast<int>(extents.size()) == dim, "extents", "needs one entry per dimension");
  for (int e : extents) require(e >= 1, "extents", "entries must be >= 1");
  for (int s : sizes) require(s >= 1, "sizes", "entries must be >= 1");
  require(!beta.empty(), "beta", "needs at least one value");
  for (double b : beta) require(std::isfinite(b) && b >= 0.0, "beta", "values must be finite and >= 0");
  const bool multi_beta = kind == Kind::Bounds || kind == Kind::OracleVerify;
  require(multi_beta || beta.size() == 1, "beta", "only bounds and oracle-verify take several values");
  try {
    CouplingDistribution::parse(distribution);
  } catch (const Error& e) {
    fail("distribution", e.what());
  }
  require(n >= 1, "n", "must be >= 1");
  require(bootstrap >= 1, "bootstrap", "must be >= 1");
  for (double x : t) require(std::isfinite(x), "t", "values must be finite");
  for (double e : epsilon) require(std::isfinite(e) && e > 0.0, "epsilon", "values must be > 0");
  require(std::isfinite(delta) && delta > 0.0, "delta", "must be > 0");
  require(seed.has_value(), "seed", "is mandatory (pass --seed); runs are never seeded from the clock");
  require(method == "auto" || method == "enumeration" || method == "transfer", "method",
          "must be auto, enumeration or transfer");
  require(enum_cap >= 1 && enum_cap <= 40, "enum_cap", "must be in [1, 40]");
  require(transfer_cap >= 1 && transfer_cap <= 24, "transfer_cap", "must be in [1, 24]");
  require(!output.empty(), "output", "must be a directory path");

  const Region box = cube(dim, window + 2 * margin);
  const auto pair_bcs = [&] {
    check_bc("bc", bc, box);
    check_bc("bc_prime", bc_prime, box);
  };
  switch (kind) {
    case Kind::Fe:
    case Kind::Ensemble:
    case Kind::Bounds:
    case Kind::Probe:
      pair_bcs();
      break;
    case Kind::Mgf:
      pair_bcs();
      require(n >= 2, "n", "mgf needs >= 2 realizations");
      require(n_outer >= 2, "n_outer", "must be >= 2");
      require(!t.empty(), "t", "needs at least one value");
      break;
    case Kind::Martingale:
      pair_bcs();
      check_bc("symmetric_bc", symmetric_bc, box);
      check_bc("symmetric_bc_prime", symmetric_bc_prime, box);
      require(n >= 2, "n", "martingale needs >= 2 realizations");
      require(n_outer >= 2, "n_outer", "must be >= 2");
      require(window % block == 0, "block", "must divide the window side");
      break;
    case Kind::EdgeMartingale:
      pair_bcs();
      require(n_outer >= 2, "n_outer", "must be >= 2");
      require(sizes.empty() || sizes.size() >= 2, "sizes", "the Lindeberg rows need >= 2 sizes");
      for (int s : sizes) {
        check_bc("bc", bc, cube(dim, s + 2 * margin));
        check_bc("bc_prime", bc_prime, cube(dim, s + 2 * margin));
      }
      break;
    case Kind::Scaling:
      require(sizes.size() >= 3, "sizes", "the scaling study needs >= 3 sizes");
      require(n >= 2, "n", "scaling needs >= 2 realizations per size");
      for (int s : sizes) {
        check_bc("bc", bc, cube(dim, s + 2 * margin));
        check_bc("bc_prime", bc_prime, cube(dim, s + 2 * margin));
      }
      break;
    case Kind::Covariance:
      for (int e : extents) require(e >= std::max(2, block), "extents", "torus sides must be >= max(2, block)");
      break;
    case Kind::DomainWall:
      for (int e : extents) require(e >= 2, "extents", "torus sides must be >= 2");
      break;
    case Kind::OracleVerify: {
      require(!oracle_bcs.empty(), "oracle_bcs", "needs at least one boundary condition");
      const Region ob = Region::open_box(extents);
      for (const auto& b : oracle_bcs) check_bc("oracle_bcs", b, ob);
      break;
    }
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["schema"] = schema;
  j["kind"] = std::string(harness::to_string(kind));
  j["id"] = id;
  j["dim"] = dim;
  j["window"] = window;
  j["margin"] = margin;
  j["sizes"] = sizes;
  j["block"] = block;
  j["extents"] = extents;
  j["beta"] = beta;
  j["distribution"] = distribution;
  j["bc"] = bc;
  j["bc_prime"] = bc_prime;
  j["oracle_bcs"] = oracle_bcs;
  j["n"] = n;
  j["n_outer"] = n_outer;
  j["bootstrap"] = bootstrap;
  j["t"] = t;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["realization"] = realization;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["symmetric_bc"] = symmetric_bc;
  j["symmetric_bc_prime"] = symmetric_bc_prime;
  j["method"] = method;
  j["enum_cap"] = enum_cap;
  j["transfer_cap"] = transfer_cap;
  j["output"] = output;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  const std::map<std::string, std::function<void(const json&)>> setters = {
      {"schema", [&](const json& v) { c.schema = v.get<int>(); }},
      {"kind", [&](const json& v) { c.kind = kind_from_string(v.get<std::string>()); }},
      {"id", [&](const json& v) { c.id = v.get<std::string>(); }},
      {"dim", [&](const json& v) { c.dim = v.get<int>(); }},
      {"window", [&](const json& v) { c.window = v.get<int>(); }},
      {"margin", [&](const json& v) { c.margin = v.get<int>(); }},
      {"sizes", [&](const json& v) { c.sizes = v.get<std::vector<int>>(); }},
      {"block", [&](const json& v) { c.block = v.get<int>(); }},
      {"extents", [&](const json& v) { c.extents = v.get<std::vector<int>>(); }},
      {"beta", [&](const json& v) { c.beta = v.get<std::vector<double>>(); }},
      {"distribution", [&](const json& v) { c.distribution = v.get<std::string>(); }},
      {"bc", [&](const json& v) { c.bc = v.get<std::string>(); }},
      {"bc_prime", [&](const json& v) { c.bc_prime = v.get<std::string>(); }},
      {"oracle_bcs", [&](const json& v) { c.oracle_bcs = v.get<std::vector<std::string>>(); }},
      {"n", [&](const json& v) { c.n = v.get<int>(); }},
      {"n_outer", [&](const json& v) { c.n_outer = v.get<int>(); }},
      {"bootstrap", [&](const json& v) { c.bootstrap = v.get<int>(); }},
      {"t", [&](const json& v) { c.t = v.get<std::vector<double>>(); }},
      {"epsilon", [&](const json& v) { c.epsilon = v.get<std::vector<double>>(); }},
      {"delta", [&](const json& v) { c.delta = v.get<double>(); }},
      {"realization", [&](const json& v) { c.realization = v.get<std::uint64_t>(); }},
      {"seed",
       [&](const json& v) {
         if (v.is_null()) {
           c.seed.reset();
         } else {
           if (!v.is_number_unsigned()) throw ConfigError("config field 'seed': must be a non-negative integer");
           c.seed = v.get<std::uint64_t>();
         }
       }},
      {"symmetric_bc", [&](const json& v) { c.symmetric_bc = v.get<std::string>(); }},
      {"symmetric_bc_prime", [&](const json& v) { c.symmetric_bc_prime = v.get<std::string>(); }},
      {"method", [&](const json& v) { c.method = v.get<std::string>(); }},
      {"enum_cap", [&](const json& v) { c.enum_cap = v.get<int>(); }},
      {"transfer_cap", [&](const json& v) { c.transfer_cap = v.get<int>(); }},
      {"output", [&](const json& v) { c.output = v.get<std::string>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config field '" + key + "': " + e.what());
    }
  }
  if (c.schema != kSchemaVersion) {
    throw ConfigError("config schema " + std::to_string(c.schema) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace eaglass::harness
