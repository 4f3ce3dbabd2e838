#include "fx42/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fx42/errors.hpp"

namespace fx42::model {

using nlohmann::json;

int Model42::currency_index(const std::string& label) const {
    for (int i = 0; i < N(); ++i) {
        if (currencies[i].label == label) return i;
    }
    return -1;
}

MarketState default_state(const Model42& m) {
    MarketState s;
    s.Y.assign(m.N(), 0.0);
    s.V.resize(m.d());
    for (int k = 0; k < m.d(); ++k) s.V[k] = m.factors[k].v0;
    return s;
}

std::vector<std::string> validate(const Model42& m) {
    std::vector<std::string> out;
    auto tag_factor = [](int k) { return "factor " + std::to_string(k) + ": "; };
    if (m.d() < 1) out.push_back("model must have at least one factor");
    if (m.N() < 1) out.push_back("model must have at least one currency");
    for (int k = 0; k < m.d(); ++k) {
        const auto& f = m.factors[k];
        try {
            cir::validate(f);
        } catch (const ValidationError& e) {
            out.push_back(tag_factor(k) + e.what());
            continue;
        }
        if (cir::feller_gap(f) < 0.0) {
            out.push_back(tag_factor(k) + "Feller condition 2*kappa*theta >= sigma^2 violated");
        }
    }
    std::set<std::string> labels;
    for (int i = 0; i < m.N(); ++i) {
        const auto& c = m.currencies[i];
        auto tag = [&] { return "currency " + std::to_string(i) + " (" + c.label + "): "; };
        if (c.label.empty()) out.push_back(tag() + "empty label");
        if (!labels.insert(c.label).second) out.push_back(tag() + "duplicate label");
        const auto dim = static_cast<size_t>(m.d());
        if (c.H.size() != dim || c.G.size() != dim || c.a.size() != dim || c.b.size() != dim) {
            out.push_back(tag() + "projection vectors must all have length d");
        }
    }
    return out;
}

void require_valid(const Model42& m) {
    const auto violations = validate(m);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "invalid model:";
    for (const auto& v : violations) msg << "\n  - " << v;
    throw ValidationError(msg.str());
}

double putative_feller_gap(const Model42& m, int i, int k) {
    if (i < 0 || i >= m.N() || k < 0 || k >= m.d()) {
        throw std::out_of_range("putative_feller_gap: index out of range");
    }
    const auto& f = m.factors[k];
    return cir::feller_gap(f) - 2.0 * f.rho * f.sigma * m.currencies[i].b[k];
}

MeasureRegime measure_regime(const Model42& m) {
    require_valid(m);
    MeasureRegime r;
    r.p_gaps.resize(m.d());
    for (int k = 0; k < m.d(); ++k) r.p_gaps[k] = cir::feller_gap(m.factors[k]);
    r.q_gaps.resize(m.N());
    r.verdicts.resize(m.N());
    for (int i = 0; i < m.N(); ++i) {
        r.q_gaps[i].resize(m.d());
        bool all_nonneg = true;
        for (int k = 0; k < m.d(); ++k) {
            r.q_gaps[i][k] = putative_feller_gap(m, i, k);
            if (r.q_gaps[i][k] < 0.0) all_nonneg = false;
        }
        r.verdicts[i] = all_nonneg ? RegimeVerdict::RiskNeutralPossible
                                   : RegimeVerdict::StrictLocalMartingale;
    }
    return r;
}

std::vector<double> market_price_of_risk(const Model42& m, int i, std::span<const double> V) {
    if (i < 0 || i >= m.N()) throw std::out_of_range("market_price_of_risk: bad currency index");
    if (static_cast<int>(V.size()) != m.d()) {
        throw std::invalid_argument("market_price_of_risk: V has wrong length");
    }
    std::vector<double> pi(m.d());
    for (int k = 0; k < m.d(); ++k) {
        if (!(V[k] > 0.0)) throw std::domain_error("market_price_of_risk: V must be > 0");
        const double sq = std::sqrt(V[k]);
        pi[k] = m.currencies[i].a[k] * sq + m.currencies[i].b[k] / sq;
    }
    return pi;
}

double short_rate(const Model42& m, int i, std::span<const double> V) {
    if (i < 0 || i >= m.N()) throw std::out_of_range("short_rate: bad currency index");
    if (static_cast<int>(V.size()) != m.d()) {
        throw std::invalid_argument("short_rate: V has wrong length");
    }
    double r = m.currencies[i].h;
    for (int k = 0; k < m.d(); ++k) {
        if (!(V[k] > 0.0)) throw std::domain_error("short_rate: V must be > 0");
        r += m.currencies[i].H[k] * V[k] + m.currencies[i].G[k] / V[k];
    }
    return r;
}

Model42 heston_embed(HestonEmbedCase c, double a, double b, const CirFactor& heston,
                     std::pair<double, double> rates) {
    cir::validate(heston);
    double ad = a, bd = b;
    switch (c) {
        case HestonEmbedCase::AsqrtV: bd = 0.0; break;
        case HestonEmbedCase::BoverSqrtV: ad = 0.0; break;
        case HestonEmbedCase::Mixed: break;
    }
    Model42 m;
    m.factors = {heston};
    m.currencies = {
        {"DOM", rates.first, {0.0}, {0.0}, {ad}, {bd}},
        {"FOR", rates.second, {0.0}, {0.0}, {ad - 1.0}, {bd}},
    };
    return m;
}

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ValidationError("model file: unknown field '" + it.key() + "' in " + where);
        }
    }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ValidationError("model file: missing or non-numeric field '" + key + "' in " + where);
    }
    return j.at(key).get<double>();
}

std::vector<double> get_vector(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        throw ValidationError("model file: missing or non-array field '" + key + "' in " + where);
    }
    std::vector<double> v;
    for (const auto& e : j.at(key)) {
        if (!e.is_number()) {
            throw ValidationError("model file: non-numeric entry in '" + key + "' in " + where);
        }
        v.push_back(e.get<double>());
    }
    return v;
}

}  // namespace

Model42 parse_model(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model file: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("model file: top level must be an object");
    reject_unknown_keys(j, {"d", "N", "factors", "currencies"}, "top level");
    for (const char* key : {"d", "N", "factors", "currencies"}) {
        if (!j.contains(key)) {
            throw ValidationError(std::string("model file: missing field '") + key + "'");
        }
    }
    const int d = j.at("d").get<int>();
    const int N = j.at("N").get<int>();

    Model42 m;
    int idx = 0;
    for (const auto& jf : j.at("factors")) {
        std::ostringstream where;
        where << "factors[" << idx++ << "]";
        reject_unknown_keys(jf, {"kappa", "theta", "sigma", "v0", "rho"}, where.str());
        CirFactor f;
        f.kappa = get_number(jf, "kappa", where.str());
        f.theta = get_number(jf, "theta", where.str());
        f.sigma = get_number(jf, "sigma", where.str());
        f.v0 = get_number(jf, "v0", where.str());
        f.rho = get_number(jf, "rho", where.str());
        m.factors.push_back(f);
    }
    idx = 0;
    for (const auto& jc : j.at("currencies")) {
        std::ostringstream where;
        where << "currencies[" << idx++ << "]";
        reject_unknown_keys(jc, {"label", "h", "H", "G", "a", "b"}, where.str());
        CurrencyBlock c;
        if (!jc.contains("label") || !jc.at("label").is_string()) {
            throw ValidationError("model file: missing or non-string 'label' in " + where.str());
        }
        c.label = jc.at("label").get<std::string>();
        c.h = get_number(jc, "h", where.str());
        c.H = get_vector(jc, "H", where.str());
        c.G = get_vector(jc, "G", where.str());
        c.a = get_vector(jc, "a", where.str());
        c.b = get_vector(jc, "b", where.str());
        m.currencies.push_back(c);
    }
    if (m.d() != d) {
        throw ValidationError("model file: declared d does not match number of factors");
    }
    if (m.N() != N) {
        throw ValidationError("model file: declared N does not match number of currencies");
    }
    require_valid(m);
    return m;
}

Model42 load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("model file: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string model_to_json(const Model42& m) {
    json j;
    j["d"] = m.d();
    j["N"] = m.N();
    j["factors"] = json::array();
    for (const auto& f : m.factors) {
        j["factors"].push_back({{"kappa", f.kappa},
                                {"theta", f.theta},
                                {"sigma", f.sigma},
                                {"v0", f.v0},
                                {"rho", f.rho}});
    }
    j["currencies"] = json::array();
    for (const auto& c : m.currencies) {
        j["currencies"].push_back({{"label", c.label},
                                   {"h", c.h},
                                   {"H", c.H},
                                   {"G", c.G},
                                   {"a", c.a},
                                   {"b", c.b}});
    }
    return j.dump(2);
}

void save_model(const Model42& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("model file: cannot write " + path.string());
    out << model_to_json(m) << "\n";
}

}  // namespace fx42::model
