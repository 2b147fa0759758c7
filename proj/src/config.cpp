#include "edgeld/config.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace edgeld {

using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_table()
{
    static const std::vector<std::pair<Experiment, std::string>> table = {
        {Experiment::EqSolve, "eq-solve"},       {Experiment::Edge, "edge"},
        {Experiment::SampleMatrix, "sample-matrix"}, {Experiment::SampleGas, "sample-gas"},
        {Experiment::LdRight, "ld-right"},       {Experiment::LdLeft, "ld-left"},
        {Experiment::Moderate, "moderate"},      {Experiment::Truncation, "truncation"},
        {Experiment::Blocks, "blocks"},          {Experiment::EdgePoisson, "edge-poisson"},
        {Experiment::TailExponent, "tail-exponent"},
    };
    return table;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items)
        out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b)
{
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::vector<std::size_t> geometric_sizes(std::size_t first, std::size_t factor, std::size_t count)
{
    std::vector<std::size_t> out;
    std::size_t v = first;
    for (std::size_t i = 0; i < count; ++i, v *= factor)
        out.push_back(v);
    return out;
}

// Reads one JSON object against a fixed key list, remembering the dotted path for
// error messages.
class ObjectReader
{
  public:
    ObjectReader(const json& object, std::string path, std::vector<std::string> keys)
        : object_(object), path_(std::move(path)), keys_(std::move(keys))
    {
        if (!object_.is_object())
            throw ConfigError(where() + " must be a JSON object");
        for (const auto& item : object_.items()) {
            if (std::find(keys_.begin(), keys_.end(), item.key()) != keys_.end())
                continue;
            std::string msg = "unknown key '" + qualified(item.key()) + "'";
            if (auto hint = closest_key(item.key(), keys_))
                msg += "; did you mean '" + *hint + "'?";
            else
                msg += "; valid keys: " + join(keys_);
            throw ConfigError(msg);
        }
    }

    bool has(const std::string& key) const { return object_.contains(key) && !object_.at(key).is_null(); }
    const json& at(const std::string& key) const { return object_.at(key); }
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const std::string& key, double& out) const
    {
        if (!has(key))
            return;
        const auto& v = at(key);
        if (!v.is_number())
            throw ConfigError("'" + qualified(key) + "' must be a number");
        out = v.get<double>();
        if (!std::isfinite(out))
            throw ConfigError("'" + qualified(key) + "' must be finite");
    }

    void count(const std::string& key, std::size_t& out) const
    {
        if (has(key))
            out = to_count(at(key), qualified(key));
    }

    void boolean(const std::string& key, bool& out) const
    {
        if (!has(key))
            return;
        if (!at(key).is_boolean())
            throw ConfigError("'" + qualified(key) + "' must be true or false");
        out = at(key).get<bool>();
    }

    void text(const std::string& key, std::string& out) const
    {
        if (!has(key))
            return;
        if (!at(key).is_string())
            throw ConfigError("'" + qualified(key) + "' must be a string");
        out = at(key).get<std::string>();
    }

    static std::size_t to_count(const json& v, const std::string& name)
    {
        if (v.is_number_unsigned())
            return v.get<std::size_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d)
                return static_cast<std::size_t>(d);
        }
        throw ConfigError("'" + name + "' must be a nonnegative integer");
    }

  private:
    std::string where() const { return path_.empty() ? "the configuration" : "'" + path_ + "'"; }

    const json& object_;
    std::string path_;
    std::vector<std::string> keys_;
};

std::string choice(const json& v, const std::string& name, const std::vector<std::string>& valid)
{
    if (!v.is_string())
        throw ConfigError("'" + name + "' must be one of: " + join(valid));
    const auto s = v.get<std::string>();
    if (std::find(valid.begin(), valid.end(), s) == valid.end()) {
        std::string msg = "invalid value '" + s + "' for '" + name + "'";
        if (auto hint = closest_key(s, valid))
            msg += "; did you mean '" + *hint + "'?";
        throw ConfigError(msg + " (valid: " + join(valid) + ")");
    }
    return s;
}

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ConfigError(message);
}

std::vector<std::size_t> count_list(const json& v, const std::string& name)
{
    require(v.is_array() && !v.empty(), "'" + name + "' must be a non-empty array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v)
        out.push_back(ObjectReader::to_count(e, name));
    return out;
}

std::vector<double> number_list(const json& v, const std::string& name)
{
    require(v.is_array() && !v.empty(), "'" + name + "' must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        require(e.is_number() && std::isfinite(e.get<double>()), "'" + name + "' must contain finite numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

EntryConfig parse_entry(const json& v, const std::string& path)
{
    ObjectReader r(v, path, {"kind", "theta", "scale"});
    EntryConfig e;
    if (r.has("kind"))
        e.kind = choice(r.at("kind"), r.qualified("kind"), {"standard_gaussian", "chi_scaled"});
    if (e.kind == "chi_scaled") {
        e.theta = 1.0;
        e.scale = 1.0 / std::sqrt(2.0);
    }
    r.number("theta", e.theta);
    r.number("scale", e.scale);
    require(e.theta > 0.0, "'" + r.qualified("theta") + "' must be positive");
    require(e.scale > 0.0, "'" + r.qualified("scale") + "' must be positive");
    return e;
}

json entry_json(const EntryConfig& e)
{
    if (e.kind == "standard_gaussian")
        return {{"kind", e.kind}};
    return {{"kind", e.kind}, {"theta", e.theta}, {"scale", e.scale}};
}

void parse_model(const json& v, ExperimentConfig& cfg)
{
    ObjectReader r(v, "model", {"kind", "pressure", "periodic", "convention", "potential", "interaction", "diag",
                                "offdiag", "mcmc"});
    ModelSpec& m = cfg.model;
    if (r.has("kind")) {
        const auto k = choice(r.at("kind"), "model.kind", {"gas-iid", "gas-matrix", "gas-mcmc", "matrix-generic"});
        m.kind = k == "gas-iid"      ? ModelKind::GasIid
                 : k == "gas-matrix" ? ModelKind::GasMatrix
                 : k == "gas-mcmc"   ? ModelKind::GasMcmc
                                     : ModelKind::MatrixGeneric;
    }
    r.number("pressure", m.pressure);
    require(m.pressure >= 0.0, "'model.pressure' must be nonnegative");
    r.boolean("periodic", m.periodic);
    if (r.has("convention"))
        m.convention = choice(r.at("convention"), "model.convention", {"scaled", "unscaled"}) == "scaled"
                           ? OffdiagConvention::Scaled
                           : OffdiagConvention::Unscaled;
    if (r.has("potential")) {
        ObjectReader p(r.at("potential"), "model.potential", {"kappa", "alpha"});
        double kappa = m.potential.kappa(), alpha = m.potential.alpha();
        p.number("kappa", kappa);
        p.number("alpha", alpha);
        require(kappa > 0.0, "'model.potential.kappa' must be positive");
        require(alpha >= 1.0, "'model.potential.alpha' must be at least 1");
        m.potential = PotentialSpec(kappa, alpha);
    }
    if (r.has("interaction")) {
        ObjectReader p(r.at("interaction"), "model.interaction", {"kind", "s"});
        std::string kind = m.interaction.is_log() ? "log" : "riesz";
        if (p.has("kind"))
            kind = choice(p.at("kind"), "model.interaction.kind", {"log", "riesz"});
        if (kind == "log") {
            require(!p.has("s"), "'model.interaction.s' only applies to the riesz kernel");
            m.interaction = InteractionKind::log();
        } else {
            double s = m.interaction.is_log() ? 0.5 : m.interaction.s();
            p.number("s", s);
            require(s > 0.0 && s < 1.0, "'model.interaction.s' must lie in (0, 1), got " + format_double(s));
            m.interaction = InteractionKind::riesz(s);
        }
    }
    if (r.has("diag"))
        cfg.diag = parse_entry(r.at("diag"), "model.diag");
    if (r.has("offdiag"))
        cfg.offdiag = parse_entry(r.at("offdiag"), "model.offdiag");
    if (r.has("mcmc")) {
        ObjectReader p(r.at("mcmc"), "model.mcmc", {"sweeps", "step_size", "burn_in_sweeps", "target_acceptance"});
        p.count("sweeps", m.mcmc.sweeps);
        p.number("step_size", m.mcmc.step_size);
        if (p.has("burn_in_sweeps") && !p.at("burn_in_sweeps").is_null())
            m.mcmc.burn_in_sweeps = static_cast<long>(ObjectReader::to_count(p.at("burn_in_sweeps"), "model.mcmc.burn_in_sweeps"));
        p.number("target_acceptance", m.mcmc.target_acceptance);
        require(m.mcmc.sweeps >= 1, "'model.mcmc.sweeps' must be at least 1");
        require(m.mcmc.step_size > 0.0, "'model.mcmc.step_size' must be positive");
        require(m.mcmc.target_acceptance > 0.0 && m.mcmc.target_acceptance < 1.0,
                "'model.mcmc.target_acceptance' must lie in (0, 1)");
    }
}

std::string model_kind_key(ModelKind k) { return model_kind_name(k); }

json model_json(const ExperimentConfig& cfg)
{
    const auto& m = cfg.model;
    json interaction = {{"kind", m.interaction.is_log() ? "log" : "riesz"}};
    if (!m.interaction.is_log())
        interaction["s"] = m.interaction.s();
    json out = {
        {"kind", model_kind_key(m.kind)},
        {"pressure", m.pressure},
        {"periodic", m.periodic},
        {"convention", m.convention == OffdiagConvention::Scaled ? "scaled" : "unscaled"},
        {"potential", {{"kappa", m.potential.kappa()}, {"alpha", m.potential.alpha()}}},
        {"interaction", interaction},
        {"mcmc",
         {{"sweeps", m.mcmc.sweeps},
          {"step_size", m.mcmc.step_size},
          {"burn_in_sweeps", m.mcmc.burn_in_sweeps < 0 ? json(nullptr) : json(m.mcmc.burn_in_sweeps)},
          {"target_acceptance", m.mcmc.target_acceptance}}},
    };
    if (cfg.diag)
        out["diag"] = entry_json(*cfg.diag);
    if (cfg.offdiag)
        out["offdiag"] = entry_json(*cfg.offdiag);
    return out;
}

std::size_t line_of(std::string_view source, std::size_t byte)
{
    byte = std::min(byte, source.size());
    return 1 + static_cast<std::size_t>(std::count(source.begin(), source.begin() + static_cast<long>(byte), '\n'));
}

json parse_strict(std::string_view source)
{
    // Duplicate keys would otherwise be silently overwritten.
    std::vector<std::set<std::string>> seen;
    std::string duplicate;
    auto callback = [&](int, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::object_start)
            seen.emplace_back();
        else if (event == json::parse_event_t::object_end && !seen.empty())
            seen.pop_back();
        else if (event == json::parse_event_t::key && !seen.empty() && duplicate.empty()) {
            const auto key = parsed.get<std::string>();
            if (!seen.back().insert(key).second)
                duplicate = key;
        }
        return true;
    };
    try {
        json doc = json::parse(source.begin(), source.end(), callback);
        if (!duplicate.empty())
            throw ConfigError("duplicate key '" + duplicate + "'");
        return doc;
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        // Drop the library's own prefix; keep its description of the problem.
        if (auto pos = what.find("syntax error"); pos != std::string::npos)
            what = what.substr(pos);
        throw ConfigError("JSON syntax error at line " + std::to_string(line_of(source, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": " + what);
    }
}

} // namespace

std::string experiment_name(Experiment e)
{
    for (const auto& [k, name] : experiment_table())
        if (k == e)
            return name;
    return "unknown";
}

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& entry : experiment_table())
            v.push_back(entry.second);
        return v;
    }();
    return names;
}

Experiment parse_experiment(std::string_view name)
{
    for (const auto& [k, n] : experiment_table())
        if (n == name)
            return k;
    std::string msg = "unknown experiment '" + std::string(name) + "'";
    if (auto hint = closest_key(name, experiment_names()))
        msg += "; did you mean '" + *hint + "'?";
    throw ConfigError(msg + " (valid: " + join(experiment_names()) + ")");
}

std::optional<std::string> closest_key(std::string_view key, const std::vector<std::string>& candidates)
{
    std::optional<std::string> best;
    std::size_t best_distance = 0;
    for (const auto& c : candidates) {
        const auto d = edit_distance(key, c);
        if (!best || d < best_distance) {
            best = c;
            best_distance = d;
        }
    }
    const std::size_t limit = std::max<std::size_t>(2, key.size() / 3);
    if (best && best_distance <= limit)
        return best;
    return std::nullopt;
}

TailStatistic make_statistic(const StatisticConfig& config)
{
    if (config.kind == "gaussian_norm")
        return gaussian_norm_statistic(config.dimension);
    if (config.kind == "gaussian_l1")
        return gaussian_l1_statistic(config.dimension);
    if (config.kind == "chi")
        return chi_statistic(config.theta);
    if (config.kind == "gaussian_entry")
        return entry_statistic(EntryDistribution::standard_gaussian());
    throw ConfigError("unknown statistic kind '" + config.kind + "'");
}

EntryDistribution make_entry_distribution(const EntryConfig& config)
{
    if (config.kind == "standard_gaussian")
        return EntryDistribution::standard_gaussian();
    if (config.kind == "chi_scaled")
        return EntryDistribution::chi_scaled(config.theta, config.scale);
    throw ConfigError("unknown entry distribution '" + config.kind + "'");
}

ExperimentConfig default_config(Experiment experiment)
{
    ExperimentConfig c;
    c.experiment = experiment;
    c.epsilons = {0.05, 0.1, 0.2, 0.4, 0.8};
    c.d_values = {1, 2, 3, 4, 5, 6, 7, 8};
    c.windows = default_count_windows();
    for (double level = 0.5; level <= 5.0 + 1e-12; level += 0.25)
        c.levels.push_back(level);
    c.n_values = geometric_sizes(128, 2, 8);
    switch (experiment) {
    case Experiment::EqSolve:
        c.model.pressure = 1.0;
        break;
    case Experiment::Edge:
        c.model.pressure = 1.0;
        c.n_values = geometric_sizes(100, 10, 4);
        break;
    case Experiment::SampleMatrix:
        c.n = 200;
        c.replicas = 10;
        break;
    case Experiment::SampleGas:
        c.n = 100;
        c.replicas = 100;
        break;
    case Experiment::LdRight:
        c.x = 1.2;
        c.replicas = 10000;
        break;
    case Experiment::LdLeft:
        c.model.kind = ModelKind::GasIid;
        c.model.pressure = 0.0;
        c.x = 0.5;
        c.n_values = geometric_sizes(1000, 10, 5);
        break;
    case Experiment::Moderate:
        c.model.kind = ModelKind::GasIid;
        c.model.pressure = 0.0;
        c.x = 1.0;
        c.n_values = geometric_sizes(1000, 10, 5);
        break;
    case Experiment::Truncation:
        c.n = 1000;
        break;
    case Experiment::Blocks:
        c.n = 10000;
        c.epsilon = 0.8;
        break;
    case Experiment::EdgePoisson:
        c.model.pressure = 1.0;
        c.n = 10000;
        c.replicas = 2000;
        break;
    case Experiment::TailExponent:
        c.replicas = 1000000;
        break;
    }
    return c;
}

ExperimentConfig parse_config(std::string_view source)
{
    const json doc = parse_strict(source);
    const ObjectReader top(doc, "",
                           {"experiment", "seed", "output_dir", "model", "n", "n_values", "replicas", "x", "gamma",
                            "epsilon", "epsilons", "d_values", "levels", "statistic", "grid", "edge_convention",
                            "windows", "confidence", "stratify"});
    require(top.has("experiment"), "missing required key 'experiment' (valid: " + join(experiment_names()) + ")");
    require(top.at("experiment").is_string(), "'experiment' must be a string");
    ExperimentConfig cfg = default_config(parse_experiment(top.at("experiment").get<std::string>()));

    if (top.has("seed")) {
        require(top.at("seed").is_number_unsigned(), "'seed' must be an unsigned 64-bit integer");
        cfg.seed = top.at("seed").get<std::uint64_t>();
    }
    top.text("output_dir", cfg.output_dir);
    require(!cfg.output_dir.empty(), "'output_dir' must not be empty");
    if (top.has("model"))
        parse_model(top.at("model"), cfg);
    top.count("n", cfg.n);
    if (top.has("n_values"))
        cfg.n_values = count_list(top.at("n_values"), "n_values");
    top.count("replicas", cfg.replicas);
    top.number("x", cfg.x);
    top.number("gamma", cfg.gamma);
    top.number("epsilon", cfg.epsilon);
    if (top.has("epsilons"))
        cfg.epsilons = number_list(top.at("epsilons"), "epsilons");
    if (top.has("d_values"))
        cfg.d_values = count_list(top.at("d_values"), "d_values");
    if (top.has("levels"))
        cfg.levels = number_list(top.at("levels"), "levels");
    if (top.has("statistic")) {
        ObjectReader s(top.at("statistic"), "statistic", {"kind", "dimension", "theta"});
        if (s.has("kind"))
            cfg.statistic.kind =
                choice(s.at("kind"), "statistic.kind", {"gaussian_norm", "gaussian_l1", "chi", "gaussian_entry"});
        s.count("dimension", cfg.statistic.dimension);
        s.number("theta", cfg.statistic.theta);
    }
    if (top.has("grid")) {
        ObjectReader g(top.at("grid"), "grid", {"half_width", "cells", "damping", "tol", "max_iter"});
        g.number("half_width", cfg.grid.half_width);
        g.count("cells", cfg.grid.cells);
        g.number("damping", cfg.grid.damping);
        g.number("tol", cfg.grid.tol);
        g.count("max_iter", cfg.grid.max_iter);
    }
    if (top.has("edge_convention"))
        cfg.edge_convention = choice(top.at("edge_convention"), "edge_convention", {"multiply", "divide"}) == "multiply"
                                  ? EdgeConvention::MultiplyByConstant
                                  : EdgeConvention::DivideByConstant;
    if (top.has("windows")) {
        const auto& w = top.at("windows");
        require(w.is_array() && !w.empty(), "'windows' must be a non-empty array of [lo, hi] pairs");
        cfg.windows.clear();
        for (const auto& pair : w) {
            require(pair.is_array() && pair.size() == 2 && pair[0].is_number() &&
                        (pair[1].is_number() || pair[1].is_null()),
                    "'windows' entries must be [lo, hi] with hi a number or null for infinity");
            CountWindow cw{pair[0].get<double>(), pair[1].is_null() ? INFINITY : pair[1].get<double>()};
            require(std::isfinite(cw.lo) && cw.lo < cw.hi, "'windows' entries need a finite lo below hi");
            cfg.windows.push_back(cw);
        }
    }
    top.number("confidence", cfg.confidence);
    if (top.has("stratify")) {
        bool s = false;
        top.boolean("stratify", s);
        cfg.stratify = s;
    }

    // Ranges.
    require(cfg.replicas >= 1, "'replicas' must be at least 1");
    require(cfg.confidence > 0.0 && cfg.confidence < 1.0, "'confidence' must lie in (0, 1)");
    require(cfg.epsilon > 0.0, "'epsilon' must be positive");
    for (double e : cfg.epsilons)
        require(e > 0.0, "'epsilons' must be positive");
    for (auto n : cfg.n_values)
        require(n >= 2, "'n_values' entries must be at least 2");
    for (auto d : cfg.d_values)
        require(d >= 1, "'d_values' entries must be at least 1");
    require(std::is_sorted(cfg.levels.begin(), cfg.levels.end()) && cfg.levels.front() > 0.0,
            "'levels' must be positive and increasing");
    require(cfg.statistic.dimension >= 1, "'statistic.dimension' must be at least 1");
    require(cfg.statistic.theta > 0.0, "'statistic.theta' must be positive");
    require(cfg.grid.half_width >= 0.0, "'grid.half_width' must be nonnegative (0 selects the default)");
    require(cfg.grid.cells >= 16, "'grid.cells' must be at least 16");
    require(cfg.grid.damping > 0.0 && cfg.grid.damping <= 1.0, "'grid.damping' must lie in (0, 1]");
    require(cfg.grid.tol > 0.0, "'grid.tol' must be positive");
    require(cfg.grid.max_iter >= 1, "'grid.max_iter' must be at least 1");

    const bool needs_n = cfg.experiment == Experiment::SampleMatrix || cfg.experiment == Experiment::SampleGas ||
                         cfg.experiment == Experiment::Truncation || cfg.experiment == Experiment::Blocks ||
                         cfg.experiment == Experiment::EdgePoisson;
    if (needs_n)
        require(cfg.n >= 2, "'n' must be at least 2");
    if (cfg.experiment == Experiment::LdLeft)
        require(cfg.x > 0.0 && cfg.x < 1.0, "'x' must lie in (0, 1) for ld-left");
    if (cfg.experiment == Experiment::Moderate) {
        require(cfg.x > 0.0, "'x' must be positive for moderate");
        const double alpha = cfg.model.is_matrix() ? 2.0 : cfg.model.potential.alpha();
        require(cfg.gamma > -1.0 / alpha && cfg.gamma < 1.0 - 1.0 / alpha,
                "'gamma' must lie in (" + format_double(-1.0 / alpha) + ", " + format_double(1.0 - 1.0 / alpha) +
                    ") for alpha = " + format_double(alpha));
    }

    if (cfg.diag || cfg.offdiag)
        require(cfg.model.kind == ModelKind::MatrixGeneric, "'model.diag' and 'model.offdiag' need kind matrix-generic");
    if (cfg.diag)
        cfg.model.diag_dist = make_entry_distribution(*cfg.diag);
    if (cfg.offdiag)
        cfg.model.offdiag_dist = make_entry_distribution(*cfg.offdiag);
    if (cfg.experiment != Experiment::EqSolve && cfg.experiment != Experiment::TailExponent) {
        try {
            cfg.model.validate();
            if (cfg.model.kind == ModelKind::MatrixGeneric) {
                const auto d = cfg.model.diag_dist.value_or(EntryDistribution::standard_gaussian());
                if (d.tail_constant() != 0.5 || (cfg.model.offdiag_dist && cfg.model.offdiag_dist->tail_constant() != 1.0))
                    throw ConfigError("model.diag needs tail constant 1/2 and model.offdiag tail constant 1");
            }
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what());
        }
    }
    return cfg;
}

std::string ExperimentConfig::echo_json() const
{
    json windows_json = json::array();
    for (const auto& w : windows)
        windows_json.push_back({w.lo, std::isinf(w.hi) ? json(nullptr) : json(w.hi)});
    json out = {
        {"experiment", experiment_name(experiment)},
        {"seed", seed},
        {"output_dir", output_dir},
        {"model", model_json(*this)},
        {"n", n},
        {"n_values", n_values},
        {"replicas", replicas},
        {"x", x},
        {"gamma", gamma},
        {"epsilon", epsilon},
        {"epsilons", epsilons},
        {"d_values", d_values},
        {"levels", levels},
        {"statistic", {{"kind", statistic.kind}, {"dimension", statistic.dimension}, {"theta", statistic.theta}}},
        {"grid",
         {{"half_width", grid.half_width},
          {"cells", grid.cells},
          {"damping", grid.damping},
          {"tol", grid.tol},
          {"max_iter", grid.max_iter}}},
        {"edge_convention", edge_convention == EdgeConvention::MultiplyByConstant ? "multiply" : "divide"},
        {"windows", windows_json},
        {"confidence", confidence},
        {"stratify", stratify ? json(*stratify) : json(nullptr)},
    };
    return out.dump(2);
}

} // namespace edgeld
