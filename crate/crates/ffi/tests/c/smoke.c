#include <stdio.h>
#include "glss.h"

static const char *MODEL =
    "{\"dims\":{\"nx\":1,\"nu\":1,\"ny\":1,\"nn\":1},"
    "\"letters\":[{\"A\":[[0.5]],\"B\":[[1.0]],\"K\":[[1.0]]},"
    "{\"A\":[[-0.3]],\"B\":[[0.5]],\"K\":[[0.2]]}],"
    "\"C\":[[1.0]],\"D\":[[0.0]],\"F\":[[1.0]],"
    "\"switching\":{\"kind\":\"discrete-iid\",\"params\":{\"probabilities\":[0.5,0.5]}},"
    "\"noise\":{\"Q_factors\":[[[1.0]]],\"R_factors\":[[[1.0]]]}}";

int main(void) {
    GlssModel *model = NULL;
    if (glss_model_from_json(MODEL, &model) != GLSS_STATUS_OK) {
        fprintf(stderr, "%s\n", glss_last_error_message());
        return 1;
    }
    double rho = 0.0;
    glss_model_stability_radius(model, &rho);

    GlssSeeds seeds = {1, 2, 3};
    GlssTrajectory *traj = NULL;
    if (glss_simulate(model, 1000, -1, seeds, &traj) != GLSS_STATUS_OK) {
        glss_model_free(model);
        return 1;
    }
    size_t rows = 0;
    glss_trajectory_rows(traj, GLSS_PROCESS_Y, &rows);
    double y[1000];
    GlssStatus st = glss_trajectory_copy(traj, GLSS_PROCESS_Y, y, rows * glss_trajectory_len(traj));

    GlssRankSummary ranks;
    glss_check_minimality(model, 1e-8, &ranks);

    GlssModel *inn = NULL;
    double radius = 0.0;
    glss_innovation_form(model, 1e-12, &inn, &radius);
    char *json = NULL;
    glss_model_to_json(inn, &json);
    printf("rho %g, y[0] %g, minimal %d, closed loop %g, %s\n", rho, y[0], ranks.minimal, radius, glss_version());

    glss_string_free(json);
    glss_model_free(inn);
    glss_trajectory_free(traj);
    glss_model_free(model);
    return st == GLSS_STATUS_OK ? 0 : 1;
}
