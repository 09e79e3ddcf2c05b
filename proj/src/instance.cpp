#include "treecut/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "treecut/errors.hpp"
#include "treecut/rng.hpp"

namespace treecut {

using nlohmann::json;

bool MipInstance::is_integer(int j) const {
    return std::binary_search(integer_set.begin(), integer_set.end(), j);
}

void MipInstance::validate() const {
    if (num_vars < 0 || num_cons < 0)
        throw InvalidInput("instance '" + name + "': negative dimensions");
    if (static_cast<int>(objective.size()) != num_vars ||
        static_cast<int>(lower.size()) != num_vars ||
        static_cast<int>(upper.size()) != num_vars)
        throw InvalidInput("instance '" + name + "': vector sizes do not match n");
    if (static_cast<int>(rows.size()) != num_cons)
        throw InvalidInput("instance '" + name + "': row count does not match m");
    for (int j = 0; j < num_vars; ++j) {
        if (!std::isfinite(lower[j]))
            throw InvalidInput("instance '" + name + "': non-finite lower bound at " + std::to_string(j));
        if (std::isnan(upper[j]))
            throw InvalidInput("instance '" + name + "': NaN upper bound at " + std::to_string(j));
        if (lower[j] > upper[j])
            throw InvalidInput("instance '" + name + "': lb > ub at variable " + std::to_string(j));
        if (!std::isfinite(objective[j]))
            throw InvalidInput("instance '" + name + "': non-finite objective at " + std::to_string(j));
    }
    int prev = -1;
    for (int j : integer_set) {
        if (j <= prev)
            throw InvalidInput("instance '" + name + "': integer_set not strictly increasing");
        if (j < 0 || j >= num_vars)
            throw InvalidInput("instance '" + name + "': integer index " + std::to_string(j) + " out of range");
        prev = j;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::set<int> seen;
        for (const auto& [j, v] : rows[i].coefs) {
            if (j < 0 || j >= num_vars)
                throw InvalidInput("instance '" + name + "': row " + std::to_string(i) +
                                   " references variable " + std::to_string(j));
            if (!seen.insert(j).second)
                throw InvalidInput("instance '" + name + "': row " + std::to_string(i) +
                                   " has duplicate variable " + std::to_string(j));
            if (v == 0.0)
                throw InvalidInput("instance '" + name + "': row " + std::to_string(i) +
                                   " stores an explicit zero coefficient");
            if (!std::isfinite(v))
                throw InvalidInput("instance '" + name + "': row " + std::to_string(i) +
                                   " has a non-finite coefficient");
        }
        if (!std::isfinite(rows[i].rhs))
            throw InvalidInput("instance '" + name + "': row " + std::to_string(i) + " has non-finite rhs");
    }
}

std::string family_name(Family f) {
    switch (f) {
        case Family::SetCovering: return "set_covering";
        case Family::MaxIndependentSet: return "max_independent_set";
        case Family::MultiKnapsack: return "multi_knapsack";
    }
    return "?";
}

Family family_from_name(const std::string& s) {
    if (s == "set_covering") return Family::SetCovering;
    if (s == "max_independent_set" || s == "mis") return Family::MaxIndependentSet;
    if (s == "multi_knapsack") return Family::MultiKnapsack;
    throw InvalidInput("unknown instance family '" + s + "'");
}

namespace {

constexpr int kRowRetries = 64;

MipInstance gen_set_covering(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.n <= 0 || cfg.m <= 0)
        throw InvalidInput("set_covering requires positive n and m");
    if (cfg.density <= 0.0 || cfg.density > 1.0)
        throw InvalidInput("density must be in (0,1]");
    MipInstance inst;
    inst.num_vars = cfg.n;
    inst.num_cons = cfg.m;
    inst.objective.resize(cfg.n);
    for (int j = 0; j < cfg.n; ++j)
        inst.objective[j] = rng.uniform_int(1, 10);
    // Coverage rows sum_{j in S_i} x_j >= 1, stored negated as <= rows.
    for (int i = 0; i < cfg.m; ++i) {
        SparseRow row;
        for (int attempt = 0;; ++attempt) {
            row.coefs.clear();
            for (int j = 0; j < cfg.n; ++j)
                if (rng.bernoulli(cfg.density)) row.coefs.emplace_back(j, -1.0);
            if (!row.coefs.empty()) break;
            if (attempt >= kRowRetries)
                throw InvalidInput("set_covering: could not populate row " + std::to_string(i) +
                                   " (density too low)");
        }
        row.rhs = -1.0;
        inst.rows.push_back(std::move(row));
    }
    inst.lower.assign(cfg.n, 0.0);
    inst.upper.assign(cfg.n, 1.0);
    inst.integer_set.resize(cfg.n);
    for (int j = 0; j < cfg.n; ++j) inst.integer_set[j] = j;
    return inst;
}

MipInstance gen_mis(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.p <= 0) throw InvalidInput("max_independent_set requires positive p");
    if (cfg.density <= 0.0 || cfg.density > 1.0)
        throw InvalidInput("density must be in (0,1]");
    MipInstance inst;
    inst.num_vars = cfg.p;
    // Maximize sum x_j stored as minimize -sum x_j.
    inst.objective.assign(cfg.p, -1.0);
    for (int u = 0; u < cfg.p; ++u)
        for (int v = u + 1; v < cfg.p; ++v)
            if (rng.bernoulli(cfg.density)) {
                SparseRow row;
                row.coefs.emplace_back(u, 1.0);
                row.coefs.emplace_back(v, 1.0);
                row.rhs = 1.0;
                inst.rows.push_back(std::move(row));
            }
    inst.num_cons = static_cast<int>(inst.rows.size());
    inst.lower.assign(cfg.p, 0.0);
    inst.upper.assign(cfg.p, 1.0);
    inst.integer_set.resize(cfg.p);
    for (int j = 0; j < cfg.p; ++j) inst.integer_set[j] = j;
    return inst;
}

MipInstance gen_multi_knapsack(const GeneratorConfig& cfg, Rng& rng) {
    if (cfg.n <= 0 || cfg.knapsacks <= 0)
        throw InvalidInput("multi_knapsack requires positive n and knapsack count");
    MipInstance inst;
    inst.num_vars = cfg.n;
    inst.objective.resize(cfg.n);
    for (int j = 0; j < cfg.n; ++j)
        inst.objective[j] = -rng.uniform_int(1, 10); // profits, negated
    for (int k = 0; k < cfg.knapsacks; ++k) {
        SparseRow row;
        double total = 0.0;
        for (int j = 0; j < cfg.n; ++j) {
            double w = rng.uniform_int(1, 10);
            row.coefs.emplace_back(j, w);
            total += w;
        }
        row.rhs = std::floor(0.5 * total);
        inst.rows.push_back(std::move(row));
    }
    inst.num_cons = cfg.knapsacks;
    inst.lower.assign(cfg.n, 0.0);
    inst.upper.assign(cfg.n, 1.0);
    inst.integer_set.resize(cfg.n);
    for (int j = 0; j < cfg.n; ++j) inst.integer_set[j] = j;
    return inst;
}

} // namespace

MipInstance generate(const GeneratorConfig& cfg) {
    Rng rng(cfg.seed);
    MipInstance inst;
    switch (cfg.family) {
        case Family::SetCovering: inst = gen_set_covering(cfg, rng); break;
        case Family::MaxIndependentSet: inst = gen_mis(cfg, rng); break;
        case Family::MultiKnapsack: inst = gen_multi_knapsack(cfg, rng); break;
    }
    std::ostringstream name;
    name << family_name(cfg.family) << "_s" << cfg.seed;
    inst.name = name.str();
    inst.validate();
    return inst;
}

std::string instance_to_json(const MipInstance& inst) {
    json j;
    j["format_version"] = 1;
    j["name"] = inst.name;
    j["n"] = inst.num_vars;
    j["m"] = inst.num_cons;
    j["c"] = inst.objective;
    json rows = json::array();
    for (const auto& row : inst.rows) {
        json r;
        json coefs = json::array();
        for (const auto& [idx, val] : row.coefs) coefs.push_back(json::array({idx, val}));
        r["coefs"] = std::move(coefs);
        r["rhs"] = row.rhs;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    j["lb"] = inst.lower;
    json ub = json::array();
    for (double u : inst.upper) {
        if (std::isinf(u)) ub.push_back("inf");
        else ub.push_back(u);
    }
    j["ub"] = std::move(ub);
    j["integers"] = inst.integer_set;
    return j.dump(2);
}

MipInstance instance_from_json(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
    auto require = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ParseError(context + ": missing key '" + key + "'");
        return j.at(key);
    };
    try {
        int version = require("format_version").get<int>();
        if (version != 1)
            throw ParseError(context + ": unsupported format_version " + std::to_string(version));
        MipInstance inst;
        inst.name = require("name").get<std::string>();
        inst.num_vars = require("n").get<int>();
        inst.num_cons = require("m").get<int>();
        inst.objective = require("c").get<std::vector<double>>();
        for (const auto& r : require("rows")) {
            SparseRow row;
            for (const auto& pair : r.at("coefs"))
                row.coefs.emplace_back(pair.at(0).get<int>(), pair.at(1).get<double>());
            row.rhs = r.at("rhs").get<double>();
            inst.rows.push_back(std::move(row));
        }
        inst.lower = require("lb").get<std::vector<double>>();
        for (const auto& u : require("ub")) {
            if (u.is_string()) {
                if (u.get<std::string>() != "inf")
                    throw ParseError(context + ": ub entries must be numbers or \"inf\"");
                inst.upper.push_back(kInf);
            } else {
                inst.upper.push_back(u.get<double>());
            }
        }
        inst.integer_set = require("integers").get<std::vector<int>>();
        inst.validate();
        return inst;
    } catch (const json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
}

void save_instance(const MipInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << instance_to_json(inst) << "\n";
}

MipInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return instance_from_json(buf.str(), path);
}

} // namespace treecut
