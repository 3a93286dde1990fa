#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roadsafe {

inline constexpr double kEarthRadiusM = 6371000.0;

/// WGS84 coordinate in degrees. Construction validates range and rejects NaN.
struct GeoPoint {
  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg);

  double lat = 0.0;
  double lon = 0.0;
};

/// iRAP star rating, 1 (most dangerous) to 5 (safest).
class StarRating {
 public:
  explicit StarRating(int value);
  int value() const { return value_; }
  friend bool operator==(StarRating a, StarRating b) {
    return a.value_ == b.value_;
  }

 private:
  int value_;
};

// HighRisk is the positive class; encoded 1 everywhere metrics are involved.
enum class SafetyLabel : int { Safe = 0, HighRisk = 1 };

SafetyLabel derive_label(StarRating star);

std::string_view to_string(SafetyLabel label);
std::optional<SafetyLabel> label_from_string(std::string_view s);

struct RoadSegment {
  std::string id;
  GeoPoint midpoint;
  std::optional<StarRating> star;
  std::optional<SafetyLabel> label;
};

/// Great-circle distance on the spherical earth, in meters.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

// Segments file: CSV `id,lat,lon,star` with star optional/blank. A present
// star also fills the label via derive_label.
std::vector<RoadSegment> read_segments_csv(std::istream& in);
void write_segments_csv(std::ostream& out,
                        const std::vector<RoadSegment>& segments);

// Labels file: CSV `id,label`, label in {safe, high_risk}.
std::vector<std::pair<std::string, SafetyLabel>> read_labels_csv(
    std::istream& in);
void write_labels_csv(
    std::ostream& out,
    const std::vector<std::pair<std::string, SafetyLabel>>& labels);

}  // namespace roadsafe
