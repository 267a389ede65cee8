#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace carshare {

enum class Destination : std::uint8_t { work_school, leisure, home, errands };
enum class LocationType : std::uint8_t { metropolis, big_city, middle_city, small_city, rural };
enum class DayType : std::uint8_t { weekday, saturday, sunday };
enum class Ownership : std::uint8_t { private_car, shared };

inline constexpr std::array<Destination, 4> all_destinations{
    Destination::work_school, Destination::leisure, Destination::home, Destination::errands};
inline constexpr std::array<LocationType, 5> all_locations{
    LocationType::metropolis, LocationType::big_city, LocationType::middle_city,
    LocationType::small_city, LocationType::rural};
inline constexpr std::array<DayType, 3> all_day_types{DayType::weekday, DayType::saturday,
                                                      DayType::sunday};

std::string_view to_string(Destination d);
std::string_view to_string(LocationType l);
std::string_view to_string(DayType d);
std::string_view to_string(Ownership o);

std::optional<Destination> parse_destination(std::string_view s);
std::optional<LocationType> parse_location(std::string_view s);
std::optional<DayType> parse_day_type(std::string_view s);
std::optional<Ownership> parse_ownership(std::string_view s);

// Throwing variants for configuration parsing.
Destination destination_from(std::string_view s);
LocationType location_from(std::string_view s);
DayType day_type_from(std::string_view s);
Ownership ownership_from(std::string_view s);

inline constexpr int minutes_per_day = 1440;
inline constexpr int slot_minutes = 5;
inline constexpr int slots_per_day = minutes_per_day / slot_minutes;  // 288
inline constexpr int slots_per_hour = 60 / slot_minutes;              // 12

}  // namespace carshare
