#pragma once

#include <cstdint>

namespace teachctl {

// COCO category_id.
using ClassId = std::int64_t;
using ImageId = std::int64_t;

}  // namespace teachctl
