class TrainingDivergedError(RuntimeError):
    """Raised when a training loss stops being finite"""

    def __init__(self, step: int, loss: float = float('nan')):
        self.step = step
        self.loss = loss
        super().__init__(f"training diverged at step {step} (loss {loss})")
