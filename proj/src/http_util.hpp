#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "knowtrace/errors.hpp"

namespace knowtrace::detail {

struct SplitUrl {
    std::string scheme_host_port;  // "http://host:port"
    std::string path;              // "/v1/completions"
};

inline SplitUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw ConfigError("URL lacks a scheme: " + std::string(url));
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

}  // namespace knowtrace::detail
