#include "v2xdose/dosimetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "v2xdose/errors.hpp"

namespace v2xdose {

void HumanModel::validate() const {
    const std::string who = "human model '" + name + "'";
    if (name.empty()) throw ValidationError("human model without a name");
    if (!(height > 0.0 && weight > 0.0)) throw ValidationError(who + ": height and weight must be positive");
    if (!(bmi > 0.0)) throw ValidationError(who + ": bmi must be positive");
    const double computed = weight / (height * height);
    if (std::abs(computed - bmi) > 0.02 * bmi) {
        std::ostringstream os;
        os << who << ": bmi " << bmi << " differs from weight/height^2 = " << computed << " by more than 2%";
        throw ValidationError(os.str());
    }
    if (!(head_height > 0.0)) throw ValidationError(who + ": head_height must be positive");
    if (!(sar_ref > 0.0)) throw ValidationError(who + ": sar_ref must be positive");
    if (!(bmi_ref > 0.0)) throw ValidationError(who + ": bmi_ref must be positive");
    if (e_ref != kReferenceField) throw ValidationError(who + ": e_ref must be 2.45 V/m");
}

const std::vector<HumanModel>& builtin_models() {
    static const std::vector<HumanModel> models = {
        {"Duke", 34, Sex::Male, 1.77, 70.2, 22.4, 1.70, 3.6e-5, 22.4, kReferenceField},
        {"Ella", 26, Sex::Female, 1.63, 57.3, 21.6, 1.50, 4.0e-5, 21.6, kReferenceField},
        {"Nina", 3, Sex::Female, 0.92, 13.9, 16.4, 0.85, 6.0e-6, 16.4, kReferenceField},
    };
    return models;
}

std::optional<HumanModel> find_builtin(std::string_view name) {
    for (const auto& m : builtin_models()) {
        if (m.name == name) return m;
    }
    return std::nullopt;
}

std::string_view to_string(Sex s) {
    switch (s) {
        case Sex::Male: return "male";
        case Sex::Female: return "female";
        case Sex::Unspecified: break;
    }
    return "unspecified";
}

double wbsar(double e_inc, const HumanModel& h) {
    if (!(e_inc >= 0.0)) throw DomainError("wbsar: incident field must be non-negative");
    const double r = e_inc / h.e_ref;
    return r * r * h.bmi_ratio() * h.sar_ref;
}

std::vector<std::optional<double>> wbsar_grid(const FieldLayer& layer, const HumanModel& h) {
    if (std::abs(layer.height - h.head_height) > 1e-6) {
        std::ostringstream os;
        os << "model '" << h.name << "' needs a field grid at height " << h.head_height << " m, got "
           << layer.height << " m";
        throw ConfigError(os.str());
    }
    std::vector<std::optional<double>> out;
    out.reserve(layer.samples.size());
    for (const auto& s : layer.samples) {
        if (s.discarded) {
            out.emplace_back();
        } else {
            out.emplace_back(wbsar(s.e_rms, h));
        }
    }
    return out;
}

ComplianceVerdict check_compliance(std::span<const double> sar, const ExposureLimit& limit) {
    if (sar.empty()) throw DomainError("check_compliance: no samples");
    if (!(limit.wb_limit > 0.0)) throw DomainError("check_compliance: limit must be positive");
    ComplianceVerdict v;
    v.max = *std::max_element(sar.begin(), sar.end());
    v.pass = v.max <= limit.wb_limit;
    v.margin_db = v.max > 0.0 ? 10.0 * std::log10(limit.wb_limit / v.max) : std::numeric_limits<double>::infinity();
    return v;
}

}  // namespace v2xdose
