#pragma once

// Single include point for cpp-httplib so every translation unit agrees on
// the OpenSSL feature macro.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
