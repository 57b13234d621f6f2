#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace stemsim {

enum class Role { mix, drums, bass, piano, guitar };

inline constexpr std::array<Role, 5> kAllRoles = {Role::mix, Role::drums, Role::bass,
                                                  Role::piano, Role::guitar};
inline constexpr std::array<Role, 4> kStemRoles = {Role::drums, Role::bass, Role::piano,
                                                   Role::guitar};

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);
// Throws Error(invalid_argument) for unknown names.
Role role_from_name(std::string_view name);

}  // namespace stemsim
