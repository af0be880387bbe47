#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "v2xdose/field_grid.hpp"

namespace v2xdose {

inline constexpr double kReferenceField = 2.45;  // V/m
inline constexpr double kWholeBodyLimit = 0.08;  // W/kg

enum class Sex { Male, Female, Unspecified };

struct HumanModel {
    std::string name;
    double age = 0.0;  // years
    Sex sex = Sex::Unspecified;
    double height = 0.0;       // m
    double weight = 0.0;       // kg
    double bmi = 0.0;          // kg/m^2
    double head_height = 0.0;  // m, grid height used for this model
    double sar_ref = 0.0;      // W/kg at e_ref
    double bmi_ref = 0.0;      // kg/m^2; equal to bmi for the built-ins
    double e_ref = kReferenceField;

    // Throws ValidationError naming the model.
    void validate() const;
    double bmi_ratio() const { return bmi_ref / bmi; }
};

const std::vector<HumanModel>& builtin_models();
std::optional<HumanModel> find_builtin(std::string_view name);
std::string_view to_string(Sex s);

// (E/E_ref)^2 * (BMI_ref/BMI) * SAR_ref. Throws DomainError for e_inc < 0.
double wbsar(double e_inc, const HumanModel& h);

// Elementwise wbSAR; discarded receivers give nullopt. Throws ConfigError
// when the layer height differs from the model's head height.
std::vector<std::optional<double>> wbsar_grid(const FieldLayer& layer, const HumanModel& h);

struct ExposureLimit {
    double wb_limit = kWholeBodyLimit;  // W/kg
};

struct ComplianceVerdict {
    double max = 0.0;
    double margin_db = 0.0;  // +inf when every sample is zero
    bool pass = true;
};

// Throws DomainError on empty input.
ComplianceVerdict check_compliance(std::span<const double> sar, const ExposureLimit& limit = {});

}  // namespace v2xdose
