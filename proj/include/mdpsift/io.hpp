#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdpsift/model.hpp"
#include "mdpsift/sim.hpp"
#include "mdpsift/value.hpp"

namespace mdpsift {

struct ModelDocument {
    ModelFamily family;
    std::optional<DecisionSpec> decision;
    std::optional<BudgetSpec> budget;
};

// JSON model files.  Schema errors and invariant violations throw
// std::invalid_argument naming the offending field path; non-integer costs
// are rejected with a hint to rescale the cost units.  save/load round-trips
// every number bit-exactly.
ModelDocument load_model(const std::string& path);
ModelDocument parse_model(const std::string& text);
void save_model(const ModelDocument& doc, const std::string& path);
std::string format_model(const ModelDocument& doc);

// JSON policy files carrying the action map plus solver metadata and the
// family digest for mismatch detection.
void save_policy(const Policy& policy, const std::string& path);
Policy load_policy(const std::string& path);

// Episode traces as line-delimited JSON: one header object, one object per
// step, one closing outcome object.
void write_trace(const EpisodeTrace& trace, const BudgetSpec& budget, std::uint64_t digest,
                 std::ostream& out);
EpisodeTrace read_trace(std::istream& in);

// Evaluation report as a one-row CSV with a header line; per-class columns
// decided_<i> / correct_rate_<i> follow the fixed columns.
void write_eval_csv(const EvalReport& report, const std::vector<double>& thresholds,
                    std::ostream& out);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mdpsift
