// SPDX-License-Identifier: Apache-2.0

#include "lemon/config.hpp"

#include <fstream>
#include <set>

namespace lemon {

namespace {

void require_object(const Json& j, const char* what, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
        throw PlanError(std::string(what) + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw PlanError(std::string(what) + ": unknown field '" + key + "'");
        }
    }
}

template <typename T>
T get_field(const Json& j, const char* key, const char* what) {
    if (!j.contains(key)) {
        throw PlanError(std::string(what) + ": missing field '" + key + "'");
    }
    const Json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
            throw PlanError(std::string(what) + ": field '" + key + "' must be a boolean");
        }
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw PlanError(std::string(what) + ": field '" + key + "' must be a non-negative integer");
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
            throw PlanError(std::string(what) + ": field '" + key + "' must be a number");
        }
    } else {
        if (!v.is_string()) {
            throw PlanError(std::string(what) + ": field '" + key + "' must be a string");
        }
    }
    return v.get<T>();
}

template <typename T>
T get_field_or(const Json& j, const char* key, const char* what, T fallback) {
    return j.contains(key) ? get_field<T>(j, key, what) : fallback;
}

}  // namespace

Json spec_to_json(const ModelSpec& spec) {
    return Json{{"norm_style", norm_style_name(spec.norm_style)},
                {"depth", spec.depth},
                {"width", spec.width},
                {"head_dim", spec.head_dim},
                {"mlp_ratio", spec.mlp_ratio},
                {"vocab_or_classes", spec.vocab_or_classes},
                {"tied_decoder", spec.tied_decoder},
                {"activation", activation_name(spec.activation)},
                {"eps", spec.eps},
                {"input", input_kind_name(spec.input)},
                {"max_positions", spec.max_positions},
                {"patch_dim", spec.patch_dim},
                {"dtype", dtype_name(spec.dtype)}};
}

ModelSpec spec_from_json(const Json& j) {
    constexpr const char* what = "model spec";
    require_object(j, what,
                   {"norm_style", "depth", "width", "head_dim", "mlp_ratio", "vocab_or_classes", "tied_decoder",
                    "activation", "eps", "input", "max_positions", "patch_dim", "dtype"});
    ModelSpec s;
    s.norm_style = parse_norm_style(get_field<std::string>(j, "norm_style", what));
    s.depth = get_field<std::size_t>(j, "depth", what);
    s.width = get_field<std::size_t>(j, "width", what);
    s.head_dim = get_field<std::size_t>(j, "head_dim", what);
    s.mlp_ratio = get_field<double>(j, "mlp_ratio", what);
    s.vocab_or_classes = get_field<std::size_t>(j, "vocab_or_classes", what);
    s.tied_decoder = get_field_or<bool>(j, "tied_decoder", what, false);
    s.activation = parse_activation(get_field_or<std::string>(j, "activation", what, "gelu"));
    s.eps = get_field_or<double>(j, "eps", what, 1e-5);
    s.input = parse_input_kind(get_field_or<std::string>(j, "input", what, "tokens"));
    s.max_positions = get_field_or<std::size_t>(j, "max_positions", what, 16);
    s.patch_dim = get_field_or<std::size_t>(j, "patch_dim", what, 0);
    s.dtype = parse_dtype(get_field_or<std::string>(j, "dtype", what, "f64"));
    s.validate();
    return s;
}

Json plan_to_json(const ExpansionPlan& plan) {
    return Json{{"target_width", plan.target_width},
                {"target_depth", plan.target_depth},
                {"policy", policy_name(plan.policy)},
                {"depth_mode", depth_mode_name(plan.depth_mode)},
                {"seed", plan.seed},
                {"noise_scale", plan.noise_scale}};
}

ExpansionPlan plan_from_json(const Json& j) {
    constexpr const char* what = "expansion plan";
    require_object(j, what, {"target_width", "target_depth", "policy", "depth_mode", "seed", "noise_scale"});
    ExpansionPlan p;
    p.target_width = get_field<std::size_t>(j, "target_width", what);
    p.target_depth = get_field<std::size_t>(j, "target_depth", what);
    p.policy = parse_policy(get_field_or<std::string>(j, "policy", what, "lemon"));
    p.depth_mode = parse_depth_mode(get_field_or<std::string>(j, "depth_mode", what, "type1"));
    p.seed = get_field_or<std::uint64_t>(j, "seed", what, 0);
    p.noise_scale = get_field_or<double>(j, "noise_scale", what, 0.02);
    return p;
}

Json schedule_to_json(const ScheduleSpec& spec) {
    return Json{{"eta_max", spec.eta_max}, {"eta_min", spec.eta_min}, {"t_warm", spec.t_warm}, {"T_total", spec.T_total}};
}

ScheduleSpec schedule_from_json(const Json& j) {
    constexpr const char* what = "schedule spec";
    require_object(j, what, {"eta_max", "eta_min", "t_warm", "T_total"});
    ScheduleSpec s;
    s.eta_max = get_field<double>(j, "eta_max", what);
    s.eta_min = get_field<double>(j, "eta_min", what);
    s.t_warm = get_field_or<std::size_t>(j, "t_warm", what, 0);
    s.T_total = get_field<std::size_t>(j, "T_total", what);
    s.validate();
    return s;
}

Json duplicate_map_to_json(const DuplicateMap& map) {
    Json arr = Json::array();
    for (const auto& g : map) {
        arr.push_back(Json{{"tensor", g.tensor}, {"axis", g.axis}, {"members", g.members}});
    }
    return arr;
}

DuplicateMap duplicate_map_from_json(const Json& j) {
    if (!j.is_array()) {
        throw PlanError("duplicate map must be an array");
    }
    DuplicateMap map;
    for (const auto& g : j) {
        constexpr const char* what = "duplicate group";
        require_object(g, what, {"tensor", "axis", "members"});
        DuplicateGroup group;
        group.tensor = get_field<std::string>(g, "tensor", what);
        group.axis = get_field<std::size_t>(g, "axis", what);
        if (group.axis > 1) {
            throw PlanError("duplicate group axis must be 0 or 1");
        }
        if (!g.at("members").is_array()) {
            throw PlanError("duplicate group members must be an array");
        }
        for (const auto& m : g.at("members")) {
            if (!m.is_number_unsigned()) {
                throw PlanError("duplicate group members must be non-negative integers");
            }
            group.members.push_back(m.get<std::size_t>());
        }
        map.push_back(std::move(group));
    }
    return map;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw PlanError("'" + path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace lemon
