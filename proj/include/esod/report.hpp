#pragma once

// Versioned run reports: one entry per image plus an aggregate block of means.

#include "esod/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace esod {

inline constexpr const char* kReportSchema = "esod.run-report/1";

struct RunReport {
    std::vector<ImageReport> images;
};

/// Keys are emitted in sorted order and numbers in shortest round-trip form,
/// so equal reports serialise to equal bytes. Means of recall and mask
/// quality skip vacuous entries; a mean with no contributing image is null.
std::string format_report(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& path);

/// Throws FormatError on a schema mismatch or missing fields.
RunReport parse_report(const std::string& text);
RunReport read_report(const std::filesystem::path& path);

/// Concatenates the image entries in argument order.
RunReport merge_reports(const std::vector<RunReport>& reports);

}  // namespace esod
