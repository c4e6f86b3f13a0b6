import math

from pydantic import BaseModel


class EarlyStopping(BaseModel):
    """
    Tracks validation losses; training stops once ``patience`` consecutive
    validations did not improve on the best loss.
    """

    patience: int
    best_loss: float = math.inf
    best_iteration: int = -1
    bad_validations: int = 0
    validations: int = 0

    def update(self, iteration: int, loss: float) -> bool:
        """
        :return: whether the loss is a new best
        """
        self.validations += 1
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_iteration = iteration
            self.bad_validations = 0
            return True
        self.bad_validations += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_validations >= self.patience
