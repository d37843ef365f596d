from typing import List, Any

from mopelab.errors import ConfigError

INT = "Int"
FLOAT = "Float"
ENUM = "Enum"
BOOL = "Bool"


class EnvArg:
    """
    A named, typed, documented environment parameter
    """

    def __init__(self, name: str, argType: str, descr: str, value: Any = None):
        self.descr = descr
        self.name = name
        self.argType = argType
        self.value = self.coerce(value) if value is not None else None

    def copy(self) -> 'EnvArg':
        return EnvArg(self.name, self.argType, self.descr, self.value)

    def coerce(self, value: Any) -> Any:
        try:
            if self.argType == INT:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError
                return int(value)
            if self.argType == FLOAT:
                if isinstance(value, bool):
                    raise ValueError
                return float(value)
            if self.argType == BOOL:
                if not isinstance(value, bool):
                    raise ValueError
                return value
        except (TypeError, ValueError):
            raise ConfigError(
                "EnvArg.coerce()", f'env.args.{self.name}: expected {self.argType}, got {value!r}'
            ) from None
        return value

    def getJSON(self) -> Any:
        return self.value

    def loadJSON(self, value: Any):
        self.value = self.coerce(value)

    def __str__(self) -> str:
        return f'EnvArg Name: "{self.name}", Type: "{self.argType}",  Val: "{self.value}"'


class EnumEnvArg(EnvArg):

    def __init__(self, name: str, descr: str, value: str, enums: List[str]):
        self.enums = enums
        super().__init__(name, ENUM, descr, value)

    def copy(self) -> 'EnvArg':
        return EnumEnvArg(self.name, self.descr, self.value, self.enums)

    def coerce(self, value: Any) -> Any:
        if value not in self.enums:
            raise ConfigError("EnumEnvArg.coerce()", f'env.args.{self.name}: expected one of {self.enums}, got {value!r}')
        return value
