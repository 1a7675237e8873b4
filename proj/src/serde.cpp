#include "setfunc/serde.hpp"

#include <string>

#include "setfunc/errors.hpp"

namespace setfunc {

namespace {

std::vector<double> flatten(const Mlp& mlp) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        flat.insert(flat.end(), mlp.weights[l].data().begin(), mlp.weights[l].data().end());
        flat.insert(flat.end(), mlp.biases[l].begin(), mlp.biases[l].end());
    }
    return flat;
}

void unflatten(Mlp& mlp, const std::vector<double>& flat) {
    std::size_t cursor = 0;
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        for (double& v : mlp.weights[l].data()) v = flat.at(cursor++);
        for (double& v : mlp.biases[l]) v = flat.at(cursor++);
    }
    if (cursor != flat.size()) {
        throw ParseError("checkpoint: parameter array has " + std::to_string(flat.size()) +
                         " values, expected " + std::to_string(cursor));
    }
}

}  // namespace

json to_json(const MonotoneMapId& g) {
    json j;
    switch (g.kind) {
        case MonotoneMapId::Kind::Identity: j["kind"] = "identity"; break;
        case MonotoneMapId::Kind::Ln: j["kind"] = "ln"; break;
        case MonotoneMapId::Kind::Exp: j["kind"] = "exp"; break;
        case MonotoneMapId::Kind::Power:
            j["kind"] = "power";
            j["q"] = g.q;
            break;
    }
    return j;
}

MonotoneMapId monotone_map_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") return MonotoneMapId::identity();
    if (kind == "ln") return MonotoneMapId::ln();
    if (kind == "exp") return MonotoneMapId::exp();
    if (kind == "power") return MonotoneMapId::power(j.at("q").get<double>());
    throw ConfigError("unknown monotone map kind '" + kind + "'");
}

json to_json(const AggregatorSpec& spec) {
    json j;
    j["kind"] = agg_kind_name(spec.kind);
    switch (spec.kind) {
        case AggKind::PowerMean:
            j["p"] = spec.p;
            j["learnable"] = spec.learnable;
            break;
        case AggKind::QuasiArithmetic: j["g"] = to_json(spec.map); break;
        case AggKind::WeightedPowerMean:
            j["p"] = spec.p;
            j["weights"] = spec.weights;
            break;
        default: break;
    }
    return j;
}

AggregatorSpec aggregator_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sum") return AggregatorSpec::sum();
    if (kind == "mean") return AggregatorSpec::mean();
    if (kind == "max") return AggregatorSpec::max();
    if (kind == "min") return AggregatorSpec::min();
    if (kind == "logsumexp_mean") return AggregatorSpec::logsumexp_mean();
    if (kind == "power_mean") {
        return AggregatorSpec::power_mean(j.value("p", 1.0), j.value("learnable", false));
    }
    if (kind == "quasi_arithmetic") {
        return AggregatorSpec::quasi_arithmetic(monotone_map_from_json(j.at("g")));
    }
    if (kind == "weighted_power_mean") {
        return AggregatorSpec::weighted_power_mean(j.at("p").get<double>(),
                                                   j.at("weights").get<std::vector<double>>());
    }
    throw ConfigError("unknown aggregator kind '" + kind + "'");
}

json to_json(const MlpSpec& spec) {
    json j;
    j["widths"] = spec.widths;
    j["activation"] = spec.activation == Act::Relu ? "relu" : "tanh";
    j["positive_output"] = spec.positive_output;
    return j;
}

MlpSpec mlp_spec_from_json(const json& j) {
    MlpSpec spec;
    spec.widths = j.at("widths").get<std::vector<std::size_t>>();
    const std::string act = j.value("activation", "tanh");
    if (act == "relu") {
        spec.activation = Act::Relu;
    } else if (act == "tanh") {
        spec.activation = Act::Tanh;
    } else {
        throw ConfigError("unknown activation '" + act + "'");
    }
    spec.positive_output = j.value("positive_output", false);
    spec.validate();
    return spec;
}

json model_to_json(const SetModel& model) {
    json j;
    j["format_version"] = 1;
    j["phi"] = to_json(model.phi.spec);
    j["aggregator"] = to_json(model.agg);
    j["rho"] = to_json(model.rho.spec);
    j["phi_params"] = flatten(model.phi);
    j["rho_params"] = flatten(model.rho);
    j["p"] = model.agg.p;
    return j;
}

SetModel model_from_json(const json& j) {
    SetModel model;
    const MlpSpec phi_spec = mlp_spec_from_json(j.at("phi"));
    const MlpSpec rho_spec = mlp_spec_from_json(j.at("rho"));
    Rng scratch(0);
    model.phi = Mlp::init(phi_spec, scratch);
    model.rho = Mlp::init(rho_spec, scratch);
    model.agg = aggregator_from_json(j.at("aggregator"));
    model.agg.p = j.at("p").get<double>();
    unflatten(model.phi, j.at("phi_params").get<std::vector<double>>());
    unflatten(model.rho, j.at("rho_params").get<std::vector<double>>());
    return model;
}

}  // namespace setfunc
