#pragma once

#include "mcinr/error.hpp"

#include <gtest/gtest.h>

#include <functional>

namespace mcinr::test {

/// Code of the Error thrown by `f`; records a failure when nothing is thrown.
inline ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidArgument;
}

}  // namespace mcinr::test
