#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include "stgsp.h"

int main(void) {
    size_t channels = 3, samples = 40;
    double *data = malloc(channels * samples * sizeof(double));
    for (size_t i = 0; i < channels * samples; i++) {
        data[i] = sin(0.3 * (double)i) + (double)((i * 37 + 11) % 23) / 7.0;
    }

    StgspSignal *signal = NULL;
    if (stgsp_signal_from_data(data, channels, samples, 100.0, &signal) != STGSP_STATUS_OK) {
        fprintf(stderr, "signal construction failed\n");
        return 1;
    }

    StgspConfig *config = stgsp_config_default();
    /* at fs=100 the default band list clamps to 7 bands -> 697 features */
    StgspFeatures *features = NULL;
    StgspStatus status = stgsp_extract_features(signal, config, &features);
    if (status != STGSP_STATUS_OK) {
        char msg[256];
        stgsp_last_error_message(msg, sizeof msg);
        fprintf(stderr, "extract failed (%d): %s\n", (int)status, msg);
        return 1;
    }
    size_t len = stgsp_features_len(features);
    double *values = malloc(len * sizeof(double));
    if (stgsp_features_values(features, values, len) != STGSP_STATUS_OK) return 1;
    printf("extracted %zu features; first = %s = %f\n", len, stgsp_features_name(features, 0), values[0]);

    double scores[4] = {0.1, 0.4, 0.35, 0.8};
    uint8_t labels[4] = {0, 0, 1, 1};
    double auc = 0.0;
    if (stgsp_auc(scores, labels, 4, &auc) != STGSP_STATUS_OK) return 1;
    printf("auc = %f (version %s)\n", auc, stgsp_version());

    stgsp_features_free(features);
    stgsp_config_free(config);
    stgsp_signal_free(signal);
    free(values);
    free(data);
    return auc == 0.75 && len == 697 ? 0 : 2;
}
