#pragma once

namespace tview {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tview
