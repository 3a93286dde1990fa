#include "roadsafe/geo.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "roadsafe/csv.hpp"

namespace roadsafe {

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
  if (std::isnan(lat_deg) || std::isnan(lon_deg)) {
    throw std::invalid_argument("GeoPoint: NaN coordinate");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0 || lon_deg < -180.0 || lon_deg > 180.0) {
    throw std::invalid_argument("GeoPoint: coordinate out of range");
  }
}

StarRating::StarRating(int value) : value_(value) {
  if (value < 1 || value > 5) {
    throw std::invalid_argument("StarRating: value must be in [1, 5]");
  }
}

SafetyLabel derive_label(StarRating star) {
  return star.value() >= 3 ? SafetyLabel::Safe : SafetyLabel::HighRisk;
}

std::string_view to_string(SafetyLabel label) {
  return label == SafetyLabel::Safe ? "safe" : "high_risk";
}

std::optional<SafetyLabel> label_from_string(std::string_view s) {
  if (s == "safe") return SafetyLabel::Safe;
  if (s == "high_risk") return SafetyLabel::HighRisk;
  return std::nullopt;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kDegToRad = 0.017453292519943295769236907684886;
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlambda / 2.0);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<RoadSegment> read_segments_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const int ci = table.column("id");
  const int cla = table.column("lat");
  const int clo = table.column("lon");
  const int cs = table.column("star");
  if (ci < 0 || cla < 0 || clo < 0) {
    throw CsvError("segments CSV needs columns id,lat,lon", 1);
  }
  std::vector<RoadSegment> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    RoadSegment seg;
    seg.id = row[ci];
    seg.midpoint = GeoPoint(std::stod(row[cla]), std::stod(row[clo]));
    if (cs >= 0 && !row[cs].empty()) {
      seg.star = StarRating(std::stoi(row[cs]));
      seg.label = derive_label(*seg.star);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

void write_segments_csv(std::ostream& out,
                        const std::vector<RoadSegment>& segments) {
  out << "id,lat,lon,star\n";
  for (const auto& s : segments) {
    write_csv_row(out, {s.id, format_double(s.midpoint.lat),
                        format_double(s.midpoint.lon),
                        s.star ? std::to_string(s.star->value()) : ""});
  }
}

std::vector<std::pair<std::string, SafetyLabel>> read_labels_csv(
    std::istream& in) {
  const CsvTable table = read_csv(in);
  const int ci = table.column("id");
  const int cl = table.column("label");
  if (ci < 0 || cl < 0) {
    throw CsvError("labels CSV needs columns id,label", 1);
  }
  std::vector<std::pair<std::string, SafetyLabel>> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto label = label_from_string(row[cl]);
    if (!label) {
      throw std::invalid_argument("unknown label '" + row[cl] + "' for id " +
                                  row[ci]);
    }
    out.emplace_back(row[ci], *label);
  }
  return out;
}

void write_labels_csv(
    std::ostream& out,
    const std::vector<std::pair<std::string, SafetyLabel>>& labels) {
  out << "id,label\n";
  for (const auto& [id, label] : labels) {
    write_csv_row(out, {id, std::string(to_string(label))});
  }
}

}  // namespace roadsafe
