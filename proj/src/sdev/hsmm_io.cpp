#include "hsmm_io.hpp"

#include <cstdio>
#include <json.hpp>

#include "error.hpp"

namespace sdev {

namespace {

constexpr const char* kFormat = "sdev-hsmm/1";

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::ordered_json shape(std::size_t r, std::size_t c) { return nlohmann::ordered_json::array({r, c}); }

Matrix read_matrix(const nlohmann::json& j, const char* key, std::size_t rows, std::size_t cols) {
    if (!j.contains(key)) throw ParseError(0, std::string("model JSON: missing '") + key + "'");
    auto m = j.at(key).get<Matrix>();
    if (m.size() != rows) throw ParseError(0, std::string("model JSON: '") + key + "' has the wrong row count");
    for (const auto& r : m)
        if (r.size() != cols) throw ParseError(0, std::string("model JSON: '") + key + "' has the wrong column count");
    return m;
}

}  // namespace

std::string detector_to_json(const Detector& d) {
    const auto& m = d.model;
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["states"] = {to_string(DeviationState::NoDeviation), to_string(DeviationState::ContextDeviation),
                   to_string(DeviationState::EventDeviation)};
    j["n_states"] = m.states();
    j["alphabet_size"] = m.alphabet_size();
    j["max_duration"] = m.max_duration();
    j["vocabulary_hash"] = hex64(d.vocabulary_hash);
    j["decode_mode"] = d.decode_mode == DecodeMode::Viterbi ? "viterbi" : "posterior";
    j["shapes"] = {{"pi", nlohmann::ordered_json::array({m.states()})},
                   {"A", shape(m.states(), m.states())},
                   {"B", shape(m.states(), m.alphabet_size())},
                   {"P", shape(m.states(), m.max_duration())}};
    auto alphabet = nlohmann::ordered_json::array();
    for (const auto& s : d.alphabet.symbols())
        alphabet.push_back({s.activity.verb(), s.activity.instrument(), s.activity.target(), s.distance});
    j["alphabet"] = std::move(alphabet);
    j["pi"] = m.pi;
    j["A"] = m.A;
    j["B"] = m.B;
    j["P"] = m.P;
    j["floors"] = {{"pi", m.pi_floor}, {"A", m.A_floor}, {"B", m.B_floor}, {"P", m.P_floor}};
    return j.dump(1);
}

Detector detector_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("model JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != kFormat) throw ParseError(0, "model JSON: unsupported format");
        const auto n = j.at("n_states").get<std::size_t>();
        const auto k = j.at("alphabet_size").get<std::size_t>();
        const auto dmax = j.at("max_duration").get<std::size_t>();
        Detector d;
        d.vocabulary_hash = std::stoull(j.at("vocabulary_hash").get<std::string>(), nullptr, 16);
        d.decode_mode = j.value("decode_mode", "viterbi") == "posterior" ? DecodeMode::Posterior : DecodeMode::Viterbi;
        for (const auto& e : j.at("alphabet")) {
            if (e.size() != 4) throw ParseError(0, "model JSON: alphabet entries need 4 fields");
            ObservationSymbol s{Activity{{e[0].get<Code>(), e[1].get<Code>(), e[2].get<Code>()}}, e[3].get<std::uint8_t>()};
            d.alphabet.intern(s);
        }
        if (d.alphabet.size() != k) throw ParseError(0, "model JSON: alphabet does not match alphabet_size");
        auto& m = d.model;
        m.pi = j.at("pi").get<std::vector<double>>();
        if (m.pi.size() != n) throw ParseError(0, "model JSON: 'pi' has the wrong length");
        m.A = read_matrix(j, "A", n, n);
        m.B = read_matrix(j, "B", n, k);
        m.P = read_matrix(j, "P", n, dmax);
        const auto& f = j.at("floors");
        m.pi_floor = f.at("pi").get<double>();
        m.A_floor = f.at("A").get<std::vector<double>>();
        m.B_floor = f.at("B").get<std::vector<double>>();
        m.P_floor = f.at("P").get<std::vector<double>>();
        check_valid(m, 1e-9);
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("model JSON: ") + e.what());
    }
}

}  // namespace sdev
