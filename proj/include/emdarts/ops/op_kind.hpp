#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace emdarts::ops {

// Local (intra-cell) candidates. The order is part of the file format and of
// every argmax tie-break; do not reorder.
enum class LocalOpKind : std::uint8_t {
  None,
  SkipConnect,
  MaxPool3,
  AvgPool3,
  SepConv3,
  SepConv5,
  DilConv3,
  DilConv5,
};

inline constexpr std::size_t kNumLocalOps = 8;

inline constexpr std::array<LocalOpKind, kNumLocalOps> kAllLocalOps = {
    LocalOpKind::None,     LocalOpKind::SkipConnect, LocalOpKind::MaxPool3, LocalOpKind::AvgPool3,
    LocalOpKind::SepConv3, LocalOpKind::SepConv5,    LocalOpKind::DilConv3, LocalOpKind::DilConv5,
};

// Global (between supernet nodes) candidates, fixed order.
enum class GlobalOpKind : std::uint8_t { None, SkipConnect, Cell };

inline constexpr std::size_t kNumGlobalOps = 3;

inline constexpr std::array<GlobalOpKind, kNumGlobalOps> kAllGlobalOps = {
    GlobalOpKind::None, GlobalOpKind::SkipConnect, GlobalOpKind::Cell};

std::string_view op_name(LocalOpKind kind);
std::string_view op_name(GlobalOpKind kind);

// Throws FormatError on unknown names.
LocalOpKind parse_local_op(std::string_view name);
GlobalOpKind parse_global_op(std::string_view name);

inline std::size_t index_of(LocalOpKind k) { return static_cast<std::size_t>(k); }
inline std::size_t index_of(GlobalOpKind k) { return static_cast<std::size_t>(k); }

}  // namespace emdarts::ops
