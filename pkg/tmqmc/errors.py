"""
Erros de domínio - hierarquia de exceções do simulador
"""
from typing import Optional


class TmqmcError(Exception):
    """Erro base; `detail` segue a convenção do HTTPException"""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidSizeError(TmqmcError):
    """Tamanho de sistema ou de cadeia inválido"""


class DimensionError(TmqmcError):
    """Configuração ou tabela com dimensão incompatível"""


class IndexRangeError(TmqmcError):
    """Índice de spin, placket ou passo fora do intervalo"""


class CapExceededError(TmqmcError):
    """Limite de enumeração/memória excedido"""

    def __init__(self, detail: str, estimated_cost: Optional[float] = None):
        if estimated_cost is not None:
            detail = f"{detail} (estimated cost ~{estimated_cost:.3g} operations)"
        super().__init__(detail)
        self.estimated_cost = estimated_cost


class ScheduleError(TmqmcError):
    """Schedule de annealing inconsistente"""


class ChainWeightError(TmqmcError):
    """Cadeia com peso nulo onde se exige peso positivo"""


class DegenerateSpectrumError(TmqmcError):
    """Autovalor dominante degenerado (Ω = 0)"""


class ConvergenceError(TmqmcError):
    """Power iteration não convergiu"""

    def __init__(self, detail: str, iterations: int, last_change: float):
        super().__init__(f"{detail} after {iterations} iterations (last relative change {last_change:.3e})")
        self.iterations = iterations
        self.last_change = last_change


class ConfigError(TmqmcError):
    """Configuração de experimento inválida"""
