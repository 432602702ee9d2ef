#pragma once

#include <cstdint>
#include <string>

namespace ced {

enum class Label : std::uint8_t { kNegative = 0, kNeutral = 1, kPositive = 2 };

inline constexpr int kNumLabels = 3;

const char* to_string(Label label);
Label label_from_string(const std::string& s);

inline int index_of(Label label) { return static_cast<int>(label); }
inline Label label_of(int index) { return static_cast<Label>(index); }

}  // namespace ced
