#pragma once

#include <json.hpp>

#include "cssm/model.hpp"
#include "cssm/train.hpp"

// JSON round-trips for cells, networks, and fit reports. Schema tags are
// versioned so older files fail loudly instead of being misread.

namespace cssm {

using json = nlohmann::json;

inline constexpr const char* kSsmSchema = "cssm-ssm-v1";
inline constexpr const char* kNetworkSchema = "cssm-network-v1";

inline json to_json(const Ssm& s) {
    json j{{"schema", kSsmSchema},
           {"a", s.a},
           {"B", s.B},
           {"C", s.C},
           {"D", s.D},
           {"d", s.dim()}};
    if (!s.K.empty()) j["K"] = s.K;
    return j;
}

inline Ssm ssm_from_json(const json& j) {
    require(j.value("schema", "") == kSsmSchema,
            "ssm_from_json: unknown or missing schema tag");
    Ssm s;
    s.a = j.at("a").get<Vec>();
    s.B = j.at("B").get<Vec>();
    s.C = j.at("C").get<Vec>();
    s.D = j.at("D").get<double>();
    if (j.contains("K")) s.K = j.at("K").get<Vec>();
    if (j.contains("d"))
        require(j.at("d").get<std::size_t>() == s.dim(), "ssm_from_json: d field mismatch");
    check_ssm(s);
    return s;
}

inline json to_json(const Ffn& f) {
    return json{{"W1", f.W1}, {"b1", f.b1}, {"W2", f.W2}, {"b2", f.b2}};
}

inline Ffn ffn_from_json(const json& j) {
    Ffn f;
    f.W1 = j.at("W1").get<Mat>();
    f.b1 = j.at("b1").get<Vec>();
    f.W2 = j.at("W2").get<Mat>();
    f.b2 = j.at("b2").get<Vec>();
    return f;
}

inline json to_json(const MultiSsmLayer& l) {
    json ssms = json::array();
    for (const auto& s : l.ssms) ssms.push_back(to_json(s));
    json j{{"ssms", std::move(ssms)}, {"frozen", l.frozen}};
    if (l.ffn) j["ffn"] = to_json(*l.ffn);
    return j;
}

inline MultiSsmLayer layer_from_json(const json& j) {
    MultiSsmLayer l;
    for (const auto& sj : j.at("ssms")) l.ssms.push_back(ssm_from_json(sj));
    l.frozen = j.value("frozen", false);
    if (j.contains("ffn")) l.ffn = ffn_from_json(j.at("ffn"));
    return l;
}

inline json to_json(const Network& n) {
    json layers = json::array();
    for (const auto& l : n.layers) layers.push_back(to_json(l));
    json enc{{"kind", n.encoder.kind == Encoder::Kind::repeat_identity
                          ? "repeat_identity"
                          : "linear"},
             {"width", n.encoder.width}};
    if (n.encoder.kind == Encoder::Kind::linear) enc["W"] = n.encoder.W;
    return json{{"schema", kNetworkSchema},
                {"encoder", std::move(enc)},
                {"layers", std::move(layers)},
                {"decoder", to_json(n.decoder)},
                {"readout", json{{"W", n.readout.W}}}};
}

inline Network network_from_json(const json& j) {
    require(j.value("schema", "") == kNetworkSchema,
            "network_from_json: unknown or missing schema tag");
    Network n;
    const json& enc = j.at("encoder");
    const std::string kind = enc.at("kind").get<std::string>();
    if (kind == "repeat_identity") {
        n.encoder.kind = Encoder::Kind::repeat_identity;
    } else if (kind == "linear") {
        n.encoder.kind = Encoder::Kind::linear;
        n.encoder.W = enc.at("W").get<Mat>();
    } else {
        throw std::invalid_argument("network_from_json: unknown encoder kind " + kind);
    }
    n.encoder.width = enc.at("width").get<std::size_t>();
    for (const auto& lj : j.at("layers")) n.layers.push_back(layer_from_json(lj));
    n.decoder = layer_from_json(j.at("decoder"));
    n.readout.W = j.at("readout").at("W").get<Mat>();
    return n;
}

inline json to_json(const FitReport& r) {
    json j{{"final_loss", r.final_loss},
           {"epochs_run", r.epochs_run},
           {"loss_trace", r.loss_trace},
           {"ssm", to_json(r.fitted)}};
    if (r.holdout_mse) j["holdout_mse"] = *r.holdout_mse;
    return j;
}

}  // namespace cssm
