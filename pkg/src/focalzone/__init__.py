"""Focal-zone feature selection with a dueling DQN and a WAS-LSTM classifier."""

from .agent import AgentConfig, FocalZoneSelector, train_agent
from .classifier import ClassifierConfig, WASLSTMClassifier, evaluate_zone_accuracy, train_classifier
from .data import Dataset, Sample, SyntheticSpec, generate_synthetic, load_csv, split
from .env import Action, EnvParams, FocalState, initial_state, step
from .exceptions import FocalZoneError, FormatError, ParseError, StageError, ValidationError
from .metrics import classification_report, pearson, roc_auc
from .model import FocalZoneClassifier
from .reward import RewardConfig, SurrogateReward, fit_ar, silhouette, state_reward
from .rs import ReplicateShuffle, RSMap, apply_rs, make_rs_map

__version__ = "0.1.0"

__all__ = [
    "Action", "AgentConfig", "ClassifierConfig", "Dataset", "EnvParams", "FocalState", "FocalZoneClassifier",
    "FocalZoneError", "FocalZoneSelector", "FormatError", "ParseError", "RSMap", "ReplicateShuffle",
    "RewardConfig", "Sample", "StageError", "SurrogateReward", "SyntheticSpec", "ValidationError",
    "WASLSTMClassifier", "apply_rs", "classification_report", "evaluate_zone_accuracy", "fit_ar",
    "generate_synthetic", "initial_state", "load_csv", "make_rs_map", "pearson", "roc_auc", "silhouette",
    "split", "state_reward", "step", "train_agent", "train_classifier",
]
