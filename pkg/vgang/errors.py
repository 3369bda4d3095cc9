from typing import Dict


class VGangError(Exception):
    def to_dict(self) -> Dict[str, str]:
        return {
            "error": type(self).__name__,
            "message": str(self),
        }


class ModelError(VGangError):
    pass


class PeriodMismatch(ModelError):
    pass


class NotViable(ModelError):
    pass


class TaskNotInGang(VGangError):
    pass


class ConfigSpaceTooLarge(VGangError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} system configurations exceed the cap of {cap}")
        self.count = count
        self.cap = cap


class PriorityNotAssigned(VGangError):
    pass


class InvalidConfig(VGangError):
    pass


class IncompleteTrace(VGangError):
    pass


class UnreachableTarget(VGangError):
    pass


class SchemaError(VGangError):
    pass
