#include "qacal/response_matrix.hpp"

#include <unordered_set>

#include "qacal/errors.hpp"

namespace qacal {

ResponseMatrix::ResponseMatrix(std::vector<std::string> person_ids, std::vector<ItemSpec> items)
    : person_ids_(std::move(person_ids)), items_(std::move(items)) {
  std::unordered_set<std::string> seen;
  for (const auto& p : person_ids_) {
    if (!seen.insert(p).second) throw InvalidInputError("duplicate person id: " + p);
  }
  seen.clear();
  for (auto& it : items_) {
    if (!seen.insert(it.id).second) throw InvalidInputError("duplicate item id: " + it.id);
    if (it.kind == ItemKind::dichotomous) {
      it.n_categories = 2;
    } else if (it.n_categories < 2) {
      throw InvalidInputError("graded item " + it.id + " needs K >= 2 categories");
    }
  }
  cells_.assign(person_ids_.size() * items_.size(), kAbsent);
}

void ResponseMatrix::set_cell(std::size_t person, std::size_t item, int value) {
  if (person >= n_persons() || item >= n_items())
    throw InvalidInputError("cell index out of range");
  if (value != kAbsent) {
    const ItemSpec& spec = items_[item];
    if (spec.kind == ItemKind::dichotomous) {
      if (value != 0 && value != 1)
        throw InvalidInputError("dichotomous item " + spec.id + " takes 0/1, got " +
                                std::to_string(value));
    } else if (value < 1 || value > spec.n_categories) {
      throw InvalidInputError("graded item " + spec.id + " takes 1.." +
                              std::to_string(spec.n_categories) + ", got " +
                              std::to_string(value));
    }
  }
  cells_[person * items_.size() + item] = value;
}

std::size_t ResponseMatrix::n_responses(std::size_t item) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < n_persons(); ++p)
    if (has_response(p, item)) ++n;
  return n;
}

ResponseMatrix ResponseMatrix::select_items(const std::vector<std::size_t>& item_indices) const {
  std::vector<ItemSpec> specs;
  specs.reserve(item_indices.size());
  for (std::size_t i : item_indices) {
    if (i >= n_items()) throw InvalidInputError("item index out of range");
    specs.push_back(items_[i]);
  }
  ResponseMatrix out(person_ids_, std::move(specs));
  for (std::size_t p = 0; p < n_persons(); ++p)
    for (std::size_t k = 0; k < item_indices.size(); ++k)
      out.cells_[p * item_indices.size() + k] = cell(p, item_indices[k]);
  return out;
}

std::size_t ResponseMatrix::find_item(const std::string& id) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (items_[i].id == id) return i;
  return npos;
}

}  // namespace qacal
