#pragma once

#include <vector>

#include "csner/corpus.hpp"

namespace csner {

/// Fills runs of O that sit between B-X/I-X on the left and I-X on the right
/// (same X) with I-X.
std::vector<Tag> repair_gap_o(std::vector<Tag> tags);

/// B-X directly followed by I-Y (Y != X) becomes B-Y.
std::vector<Tag> repair_b_category(std::vector<Tag> tags);

/// Gap repair, then category repair.
std::vector<Tag> postprocess_sentence(std::vector<Tag> tags);

Dataset postprocess_dataset(Dataset d);

}  // namespace csner
