#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sparsefl/control.hpp"
#include "sparsefl/dictionary.hpp"
#include "sparsefl/lie.hpp"
#include "sparsefl/regression.hpp"

namespace sparsefl {

/// Malformed or inconsistent artifact file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model plus the library it was identified with.
struct StoredModel {
  SparseModel model;
  DictionarySet entries;  // symbolic entries only
};

nlohmann::json model_to_json(const SparseModel& model, const DictionarySet& ds);
StoredModel model_from_json(const nlohmann::json& j);

nlohmann::json controller_to_json(const ControllerSpec& spec);
ControllerSpec controller_from_json(const nlohmann::json& j);

nlohmann::json lie_to_json(const LieChain& chain, int n_states);
/// Chain display followed by the normal form (or the reason it is missing).
std::string lie_report(const LieChain& chain, const ControlAffineSystem& sys);

/// One row per distinct dictionary entry; columns xi_tilde_l, xi_hat_l,
/// zeta. Cells for entries outside a column's library are left empty.
std::string coefficient_table_csv(const SparseModel& model, const DictionarySet& ds);
/// "x1' = ...", "y = ..." lines.
std::string discovered_equations(const SparseModel& model);
std::string identification_report(const SparseModel& model, const DictionarySet& ds, bool derivatives_estimated);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace sparsefl
