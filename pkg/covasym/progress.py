import sys
from threading import RLock

from tqdm import tqdm

__all__ = ['TrialProgress']


class TrialProgress:
    ''' Progress of a batch of trials, drawn with tqdm on stderr

        Completion is counted in trials so a suite can call .increment() once
        per finished trial, from any worker thread. Drawing is switched off
        when stderr is not a terminal, so report files and captured logs stay
        clean.
    '''
    def __init__(self, iterations:int=1, text:str='Running...', enabled:bool=None):
        '''
        Parameters
        ----------
            :param iterations: int - number of trials until completion
            :param text: str - label shown in front of the bar
            :param enabled: bool or None - force drawing on/off; None follows stderr.isatty()
        '''
        self.iterations = max(1, iterations)
        self.current_value = 0
        self.text = text
        self.complete = False
        self.enabled = sys.stderr.isatty() if enabled is None else enabled
        self._lock = RLock()
        self._bar = None

    def reset(self, iterations:int=None, current_value:int=None):
        '''restarts the bar, optionally with a new trial count'''
        with self._lock:
            if iterations is not None:
                self.iterations = max(1, iterations)
            self.current_value = current_value if current_value is not None else 0
            self.complete = False
            if self._bar is not None:
                self._bar.close()
            self._bar = tqdm(total=self.iterations, initial=self.current_value, desc=self.text,
                             file=sys.stderr, disable=not self.enabled, leave=False)

    def set_text(self, text:str):
        '''updates the label'''
        self.text = text
        if self._bar is not None:
            self._bar.set_description_str(text)

    def increment(self, inc:int=1):
        '''called every time a trial is completed'''
        with self._lock:
            if self._bar is None:
                self.reset()
            new_value = max(0, min(self.current_value + inc, self.iterations))
            self._bar.update(new_value - self.current_value)
            self.current_value = new_value

    def fraction(self) -> float:
        return self.current_value / self.iterations

    def to_complete(self):
        '''closes the bar and marks the batch as complete'''
        with self._lock:
            if self._bar is not None:
                self._bar.close()
                self._bar = None
            self.complete = True

    def is_complete(self) -> bool:
        return self.complete
