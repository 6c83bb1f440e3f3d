#pragma once

namespace txreid {

inline constexpr const char* kToolName = "txreid";
inline constexpr const char* kToolVersion = "1.0.0";

// Version tag embedded in every JSON report so downstream consumers can
// detect schema changes.
inline constexpr const char* kReportFormatVersion = "1";

}  // namespace txreid
