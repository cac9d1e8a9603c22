#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace latent {

/// Flat "section.key" -> value store parsed from an INI-style file
/// (sections in brackets, key = value lines, # comments). Flags override
/// file entries via set(). Keys are validated against the known-key schema.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(std::string_view text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    /// Rejects keys outside the schema, naming the offending key path.
    void validate_known_keys() const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace latent
