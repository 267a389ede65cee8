#include "carshare/types.hpp"

#include <string>

#include "carshare/error.hpp"

namespace carshare {

std::string_view to_string(Destination d) {
  switch (d) {
    case Destination::work_school: return "work_school";
    case Destination::leisure: return "leisure";
    case Destination::home: return "home";
    case Destination::errands: return "errands";
  }
  return "?";
}

std::string_view to_string(LocationType l) {
  switch (l) {
    case LocationType::metropolis: return "metropolis";
    case LocationType::big_city: return "big_city";
    case LocationType::middle_city: return "middle_city";
    case LocationType::small_city: return "small_city";
    case LocationType::rural: return "rural";
  }
  return "?";
}

std::string_view to_string(DayType d) {
  switch (d) {
    case DayType::weekday: return "weekday";
    case DayType::saturday: return "saturday";
    case DayType::sunday: return "sunday";
  }
  return "?";
}

std::string_view to_string(Ownership o) {
  return o == Ownership::shared ? "shared" : "private";
}

std::optional<Destination> parse_destination(std::string_view s) {
  for (auto d : all_destinations)
    if (to_string(d) == s) return d;
  if (s == "work" || s == "school") return Destination::work_school;
  return std::nullopt;
}

std::optional<LocationType> parse_location(std::string_view s) {
  for (auto l : all_locations)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

std::optional<DayType> parse_day_type(std::string_view s) {
  for (auto d : all_day_types)
    if (to_string(d) == s) return d;
  return std::nullopt;
}

std::optional<Ownership> parse_ownership(std::string_view s) {
  if (s == "private") return Ownership::private_car;
  if (s == "shared") return Ownership::shared;
  return std::nullopt;
}

namespace {
template <class T>
T require(std::optional<T> v, std::string_view what, std::string_view s) {
  if (!v) throw UserError("unknown " + std::string(what) + " '" + std::string(s) + "'");
  return *v;
}
}  // namespace

Destination destination_from(std::string_view s) {
  return require(parse_destination(s), "destination", s);
}
LocationType location_from(std::string_view s) {
  return require(parse_location(s), "location type", s);
}
DayType day_type_from(std::string_view s) { return require(parse_day_type(s), "day type", s); }
Ownership ownership_from(std::string_view s) {
  return require(parse_ownership(s), "ownership", s);
}

}  // namespace carshare
