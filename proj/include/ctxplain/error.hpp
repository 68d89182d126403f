#pragma once

#include <stdexcept>
#include <string>

namespace ctx {

// Base class for every error this library raises. Catch this (or a derived
// type) to distinguish data problems from programming errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : error {
    using error::error;
};

// -- file format errors -------------------------------------------------

struct bad_magic : error {
    using error::error;
};

struct bad_header_size : error {
    using error::error;
};

struct truncated_file : error {
    using error::error;
};

struct unsupported_datatype : error {
    using error::error;
};

struct unsupported_png : error {
    using error::error;
};

struct version_mismatch : error {
    using error::error;
};

// -- domain errors ------------------------------------------------------

struct index_out_of_range : error {
    using error::error;
};

struct empty_band : error {
    using error::error;
};

struct empty_mask : error {
    using error::error;
};

struct shape_mismatch : error {
    using error::error;
};

struct stale_record : error {
    using error::error;
};

struct no_conv_output : error {
    using error::error;
};

struct no_conv_layer : error {
    using error::error;
};

struct no_forward_record : error {
    using error::error;
};

struct empty_dataset : error {
    using error::error;
};

struct empty_set : error {
    using error::error;
};

struct no_positives : error {
    using error::error;
};

struct one_class_only : error {
    using error::error;
};

struct too_few_samples : error {
    using error::error;
};

}  // namespace ctx
