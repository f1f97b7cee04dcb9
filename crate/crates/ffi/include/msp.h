#ifndef MSP_H
#define MSP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MspStatus {
  MSP_STATUS_OK = 0,
  MSP_STATUS_INVALID_ARGUMENT = 1,
  MSP_STATUS_IO = 2,
  MSP_STATUS_FORMAT = 3,
  MSP_STATUS_ALGORITHM = 4,
  MSP_STATUS_NULL_POINTER = 5,
  MSP_STATUS_PANIC = 6,
} MspStatus;

typedef enum MspDtype {
  MSP_DTYPE_F32 = 0,
  MSP_DTYPE_U32 = 1,
} MspDtype;

typedef struct MspImage MspImage;

typedef struct MspPartition MspPartition;

typedef struct MspTensor MspTensor;

typedef struct MspTrace MspTrace;

/**
 * Segmentation quality summary filled by `msp_metrics`.
 */
typedef struct MspMetrics {
  double miou;
  double pixel_accuracy;
  double boundary_precision;
  double boundary_recall;
  double boundary_fscore;
} MspMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a successful call.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *msp_last_error(void);

const char *msp_version(void);

enum MspStatus msp_tensor_new_f32(const size_t *shape,
                                  size_t ndim,
                                  const float *data,
                                  size_t len,
                                  struct MspTensor **out);

enum MspStatus msp_tensor_new_u32(const size_t *shape,
                                  size_t ndim,
                                  const uint32_t *data,
                                  size_t len,
                                  struct MspTensor **out);

void msp_tensor_free(struct MspTensor *tensor);

/**
 * Number of dimensions, or 0 for a NULL handle.
 */
size_t msp_tensor_ndim(const struct MspTensor *tensor);

/**
 * Number of elements, or 0 for a NULL handle.
 */
size_t msp_tensor_len(const struct MspTensor *tensor);

enum MspStatus msp_tensor_dtype(const struct MspTensor *tensor, enum MspDtype *out);

/**
 * Copies the shape into `dims`, which must hold exactly `ndim` entries.
 */
enum MspStatus msp_tensor_shape(const struct MspTensor *tensor, size_t *dims, size_t ndim);

enum MspStatus msp_tensor_copy_f32(const struct MspTensor *tensor, float *dst, size_t len);

enum MspStatus msp_tensor_copy_u32(const struct MspTensor *tensor, uint32_t *dst, size_t len);

enum MspStatus msp_tensor_read(const char *path, struct MspTensor **out);

enum MspStatus msp_tensor_write(const struct MspTensor *tensor, const char *path);

/**
 * `rgb` holds `height * width * 3` interleaved bytes in row-major order.
 */
enum MspStatus msp_image_new(size_t height,
                             size_t width,
                             const uint8_t *rgb,
                             size_t len,
                             struct MspImage **out);

/**
 * Reads a binary PPM (P6) or PGM (P5) file.
 */
enum MspStatus msp_image_read(const char *path, struct MspImage **out);

void msp_image_free(struct MspImage *image);

enum MspStatus msp_partition_from_labels(size_t height,
                                         size_t width,
                                         const uint32_t *labels,
                                         size_t len,
                                         struct MspPartition **out);

void msp_partition_free(struct MspPartition *partition);

/**
 * Number of blocks, or 0 for a NULL handle.
 */
size_t msp_partition_num_blocks(const struct MspPartition *partition);

enum MspStatus msp_partition_copy_labels(const struct MspPartition *partition,
                                         uint32_t *dst,
                                         size_t len);

enum MspStatus msp_slic(const struct MspImage *image,
                        size_t lambda,
                        double compactness,
                        struct MspPartition **out);

enum MspStatus msp_quickshift(const struct MspImage *image,
                              double sigma,
                              double tau,
                              double color_ratio,
                              struct MspPartition **out);

enum MspStatus msp_ssp_forward(const struct MspTensor *x,
                               const struct MspPartition *partition,
                               double alpha,
                               struct MspTensor **out);

enum MspStatus msp_ssp_backward(const struct MspTensor *grad_out,
                                const struct MspPartition *partition,
                                double alpha,
                                struct MspTensor **out);

/**
 * Runs the SLIC-driven cascade over `x` ([C, H, W] f32). `out_trace` receives the
 * partitions needed by `msp_cascade_backward`.
 */
enum MspStatus msp_cascade_forward(const struct MspTensor *x,
                                   const struct MspImage *image,
                                   const size_t *scales,
                                   size_t num_scales,
                                   double alpha,
                                   struct MspTensor **out,
                                   struct MspTrace **out_trace);

enum MspStatus msp_cascade_backward(const struct MspTensor *grad_out,
                                    const struct MspTrace *trace,
                                    double alpha,
                                    struct MspTensor **out);

/**
 * Number of cascade stages, or 0 for a NULL handle.
 */
size_t msp_trace_num_stages(const struct MspTrace *trace);

void msp_trace_free(struct MspTrace *trace);

/**
 * Cascade over class probabilities followed by argmax. `out` receives a [H, W] u32 tensor.
 */
enum MspStatus msp_refine(const struct MspTensor *probs,
                          const struct MspImage *image,
                          const size_t *scales,
                          size_t num_scales,
                          double alpha,
                          struct MspTensor **out);

/**
 * Compares two [H, W] u32 label tensors.
 */
enum MspStatus msp_metrics(const struct MspTensor *pred,
                           const struct MspTensor *gt,
                           size_t num_classes,
                           uint32_t ignore_label,
                           size_t boundary_tolerance,
                           struct MspMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSP_H */
