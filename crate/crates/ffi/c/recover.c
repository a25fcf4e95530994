#include <stdio.h>
#include "fps_sft.h"

int main(void) {
    uintptr_t dims[2] = {16, 12};
    FpsSpectrum *truth = NULL;
    FpsReport *report = NULL;
    FpsSpectrum *recovered = NULL;
    if (fps_generate(dims, 2, 10, "uniform", 7, &truth) != FPS_STATUS_OK ||
        fps_recover(truth, FPS_ALGORITHM_FPS, 3, 0, &report) != FPS_STATUS_OK ||
        fps_report_recovered(report, &recovered) != FPS_STATUS_OK) {
        char msg[256];
        fps_last_error_message(msg, sizeof msg);
        fprintf(stderr, "error: %s\n", msg);
        return 1;
    }
    int ok = fps_spectrum_matches(recovered, truth, 1e-8);
    printf("iterations=%zu samples=%llu exact=%d\n", (size_t)fps_report_iterations(report),
           (unsigned long long)fps_report_samples_used(report), ok);
    fps_spectrum_free(recovered);
    fps_report_free(report);
    fps_spectrum_free(truth);
    return ok ? 0 : 1;
}
