#pragma once

// Static SVG rendering of the harness CSV outputs. Output is a pure function
// of the input table, so identical input gives byte-identical documents.

#include <optional>
#include <string>
#include <string_view>

#include "msekit/csv.hpp"

namespace msekit {

enum class FigureKind { sweep_band, trajectory, bias_curve, consistency_dots };

std::string to_string(FigureKind kind);
std::optional<FigureKind> parse_figure_kind(std::string_view name);

/// The CSV header a figure kind expects.
const std::vector<std::string>& figure_schema(FigureKind kind);

struct FigureOptions {
  std::string title;
  /// Trajectory figures: horizontal reference rule on the ratio axis.
  std::optional<double> truth;
};

/// Throws Error when the table's header does not match the kind's schema.
std::string render_figure(const CsvTable& table, FigureKind kind, const FigureOptions& options = {});

}  // namespace msekit
