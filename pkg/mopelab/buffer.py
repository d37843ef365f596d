import threading
from typing import List, Optional

import numpy as np

from mopelab.errors import ShapeError


class Transition:

    def __init__(self, state: np.ndarray, action: np.ndarray, nextState: np.ndarray, reward: float):
        self.state = state
        self.action = action
        self.nextState = nextState
        self.reward = reward


class TransitionBatch:
    """
    Column view of a set of transitions
    """

    def __init__(self, states: np.ndarray, actions: np.ndarray, nextStates: np.ndarray, rewards: np.ndarray):
        self.states = states
        self.actions = actions
        self.nextStates = nextStates
        self.rewards = rewards

    def __len__(self) -> int:
        return self.states.shape[0]

    def take(self, idx: np.ndarray) -> 'TransitionBatch':
        return TransitionBatch(self.states[idx], self.actions[idx], self.nextStates[idx], self.rewards[idx])


class ReplayBuffer:
    """
    Insertion-ordered transition store. Single writer, many readers.
    With a capacity the oldest transitions are dropped first.
    """

    def __init__(self, stateDim: int, actionDim: int, capacity: Optional[int] = None):
        self.stateDim = stateDim
        self.actionDim = actionDim
        self.capacity = capacity
        self._records: List[Transition] = []
        self._lock = threading.Lock()
        self._cache: Optional[TransitionBatch] = None

    def __len__(self) -> int:
        return len(self._records)

    def add(self, state, action, nextState, reward: float):
        state = np.array(state, dtype=np.float64).reshape(-1)
        action = np.array(action, dtype=np.float64).reshape(-1)
        nextState = np.array(nextState, dtype=np.float64).reshape(-1)

        if state.shape[0] != self.stateDim or nextState.shape[0] != self.stateDim:
            raise ShapeError(
                "ReplayBuffer.add()",
                f"state dims {state.shape[0]}/{nextState.shape[0]} do not match buffer state dim {self.stateDim}"
            )
        if action.shape[0] != self.actionDim:
            raise ShapeError(
                "ReplayBuffer.add()", f"action dim {action.shape[0]} does not match buffer action dim {self.actionDim}"
            )

        with self._lock:
            self._records.append(Transition(state, action, nextState, float(reward)))
            if self.capacity is not None and len(self._records) > self.capacity:
                self._records.pop(0)
            self._cache = None

    def batch(self) -> TransitionBatch:
        with self._lock:
            if self._cache is None:
                if len(self._records) == 0:
                    self._cache = TransitionBatch(
                        np.zeros((0, self.stateDim)), np.zeros((0, self.actionDim)), np.zeros((0, self.stateDim)),
                        np.zeros(0)
                    )
                else:
                    self._cache = TransitionBatch(
                        np.stack([r.state for r in self._records]),
                        np.stack([r.action for r in self._records]),
                        np.stack([r.nextState for r in self._records]),
                        np.array([r.reward for r in self._records]),
                    )
            return self._cache

    def tail(self, count: int) -> TransitionBatch:
        """
        The last count transitions, oldest first
        """
        full = self.batch()
        start = max(0, len(full) - count)
        return full.take(np.arange(start, len(full)))
