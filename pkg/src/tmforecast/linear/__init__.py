from .arar import ArarModel, arar_fit, arar_predict, arar_prediction_path, arar_shorten
from .arima import DifferencingOp, apply_differencing, arima_predict_one_step, arima_prediction_path
from .arma import (
    ArmaModel,
    InnovationsState,
    arma_innovations,
    arma_predict_one_step,
    arma_prediction_path,
    fit_ar_yule_walker,
    fit_arma,
    innovations,
    sample_acvf,
)
from .holtwinters import (
    HoltWintersState,
    hw_fit,
    hw_forecast,
    hw_init,
    hw_prediction_path,
    hw_sse_grid,
    hw_update,
)
