#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace qacal {

enum class ItemKind { dichotomous, graded };

struct ItemSpec {
  std::string id;
  ItemKind kind = ItemKind::dichotomous;
  int n_categories = 2;  // declared K; fixed at 2 for dichotomous items
};

// Persons x items response grid. Dichotomous cells hold 0/1, graded cells an
// ordinal category 1..K, kAbsent marks a missing cell. Immutable once filled;
// set_cell is for construction only.
class ResponseMatrix {
 public:
  static constexpr int kAbsent = -1;

  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> person_ids, std::vector<ItemSpec> items);

  std::size_t n_persons() const { return person_ids_.size(); }
  std::size_t n_items() const { return items_.size(); }
  const std::vector<std::string>& person_ids() const { return person_ids_; }
  const std::vector<ItemSpec>& items() const { return items_; }
  const ItemSpec& item(std::size_t i) const { return items_[i]; }

  int cell(std::size_t person, std::size_t item) const {
    return cells_[person * items_.size() + item];
  }
  bool has_response(std::size_t person, std::size_t item) const {
    return cell(person, item) != kAbsent;
  }
  void set_cell(std::size_t person, std::size_t item, int value);

  std::size_t n_responses(std::size_t item) const;

  // Submatrix with only the given item columns, in the given order.
  ResponseMatrix select_items(const std::vector<std::size_t>& item_indices) const;

  // Index of an item id, or npos.
  std::size_t find_item(const std::string& id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> person_ids_;
  std::vector<ItemSpec> items_;
  std::vector<int> cells_;
};

}  // namespace qacal
