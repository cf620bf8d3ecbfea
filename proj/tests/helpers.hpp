#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

#include "doctest.h"

// Self-deleting scratch directory for fixture files.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "umr_test_XXXXXX").string();
        char* made = mkdtemp(tmpl.data());
        if (!made) throw std::runtime_error("mkdtemp failed");
        path = made;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str(const std::string& rel = "") const {
        return (rel.empty() ? path : path / rel).string();
    }
};

// Asserts fn throws E whose message contains every given fragment.
template <typename E = std::exception>
void expect_throw_contains(const std::function<void()>& fn,
                           std::initializer_list<std::string> fragments) {
    try {
        fn();
        FAIL_CHECK("expected an exception, none thrown");
    } catch (const E& e) {
        std::string what = e.what();
        for (const auto& frag : fragments) {
            INFO("message: ", what);
            CHECK(what.find(frag) != std::string::npos);
        }
    }
}
