#include "csner/postprocess.hpp"

namespace csner {

std::vector<Tag> repair_gap_o(std::vector<Tag> tags) {
  const std::size_t n = tags.size();
  std::size_t i = 1;
  while (i < n) {
    if (!tags[i].is_outside() || tags[i - 1].is_outside()) {
      ++i;
      continue;
    }
    std::size_t r = i;
    while (r < n && tags[r].is_outside()) ++r;
    if (r < n && tags[r].is_inside() && tags[r].category == tags[i - 1].category) {
      for (std::size_t k = i; k < r; ++k) tags[k] = Tag::inside(tags[r].category);
    }
    i = r;
  }
  return tags;
}

std::vector<Tag> repair_b_category(std::vector<Tag> tags) {
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) {
    if (tags[i].is_begin() && tags[i + 1].is_inside() &&
        tags[i + 1].category != tags[i].category) {
      tags[i].category = tags[i + 1].category;
    }
  }
  return tags;
}

std::vector<Tag> postprocess_sentence(std::vector<Tag> tags) {
  return repair_b_category(repair_gap_o(std::move(tags)));
}

Dataset postprocess_dataset(Dataset d) {
  for (auto& s : d.sentences) {
    if (s.tags) s.tags = postprocess_sentence(std::move(*s.tags));
  }
  return d;
}

}  // namespace csner
