from qesq.main import app

__all__ = ()

app(prog_name="qesq")
