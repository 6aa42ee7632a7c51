__all__ = ['CovasymError', 'DomainError', 'RegisterError', 'TruncationError',
           'SingularFamilyError', 'ChannelError', 'ConfigError', 'NumericalAbort',
           'EXIT_PASS', 'EXIT_CHECK_FAILED', 'EXIT_CONFIG', 'EXIT_NUMERICAL']

# exit codes used by the harness
EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class CovasymError(Exception):
    '''Base class for every error raised by covasym'''


class DomainError(CovasymError, ValueError):
    ''' Input lies outside the domain of an operation

        Invalid weight-for-irrep combinations, triangle-rule violations,
        tables that reference sectors absent from a space, mismatched spaces
        and operations called on the wrong group kind all raise this.
    '''


class RegisterError(DomainError):
    '''weight register does not cover the source weights plus the required padding'''


class TruncationError(DomainError):
    '''U(1) charge shift would leave the space and the family was not flagged as truncating'''


class SingularFamilyError(DomainError):
    ''' P = sum K^dag K is singular, so the family cannot be normalized

        The message names the sectors that the family does not support.
    '''
    def __init__(self, message:str, sectors:list):
        DomainError.__init__(self, message)
        self.sectors = list(sectors)


class ChannelError(DomainError):
    '''channel does not satisfy the structural requirement of an operation'''


class ConfigError(CovasymError, ValueError):
    '''invalid experiment configuration (harness exit code 2)'''


class NumericalAbort(CovasymError, ArithmeticError):
    ''' Numerical result is too far from its mathematical guarantee to be noise

        Raised when an eigenvalue that must be non-negative is below the clip
        threshold. `diagnostics` is dumped by the harness before exiting with
        code 3.
    '''
    def __init__(self, message:str, diagnostics:dict=None):
        ArithmeticError.__init__(self, message)
        self.diagnostics = dict(diagnostics) if diagnostics else {}
