#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvrate {

/// Parse failure with the 1-based line it refers to (0 when not tied to a line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

/// Flat `key = value` text with `[section]` headers. Keys are stored as
/// "section.key" (or just "key" before the first header). `#` and `;` start
/// comments. Duplicate keys are an error.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueFile load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    /// Line where `key` was defined, 0 if absent.
    int line_of(const std::string& key) const;
    const std::string& source() const { return source_; }
    std::vector<std::string> keys() const;

    /// Marks a key as consumed; `unused_keys` lists the rest.
    void touch(const std::string& key) const { used_[key] = true; }
    std::vector<std::string> unused_keys() const;

private:
    std::string source_;
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
    mutable std::map<std::string, bool> used_;
};

}  // namespace tvrate
