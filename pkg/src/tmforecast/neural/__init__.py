from .activations import f, g, h, sigmoid
from .lstm import LstmGradients, LstmLayer, LstmTrace, lstm_backward, lstm_forward
from .mlp import MlpBaseline, mlp_forward, mlp_train
from .network import Network, TrainConfig, network_forward, sgd_train, train
from .serialize import SavedModel, load_model, save_model
