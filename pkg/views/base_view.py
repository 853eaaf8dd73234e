# Vista de consola
# Formatea las respuestas de los controladores como texto legible o JSON

import json
from typing import Any, Dict, Optional


class BaseView:
    """
    Presentación de respuestas de comandos.
    Una respuesta es {"status", "message", "data"}; en error, data lleva
    error_message y error_code.
    """

    def format_response(self, data: Any, status: str = "success", message: str = "") -> Dict[str, Any]:
        """
        Formatea una respuesta estándar de un comando
        Args:
            data: Datos a incluir en la respuesta
            status: success o error
            message: Mensaje descriptivo
        Returns:
            Diccionario con la respuesta
        """
        return {"status": status, "message": message, "data": data}

    def format_error(self, error_message: str, error_code: Optional[str] = None) -> Dict[str, Any]:
        """Respuesta de error con código (CONFIG_ERROR, NUMERIC_ERROR, ...)"""
        error_data = {"error_message": error_message, "error_code": error_code}
        return self.format_response(error_data, "error", "Ha ocurrido un error")

    def render_json(self, response: Dict[str, Any]) -> str:
        return json.dumps(response, ensure_ascii=False, indent=2, sort_keys=True, default=str)

    def render_text(self, response: Dict[str, Any]) -> str:
        """
        Texto para la consola: las líneas preparadas por el controlador
        y después los valores escalares de data
        """
        if response["status"] == "error":
            error = response["data"]
            return f"[{error['error_code']}] {error['error_message']}"
        lines = [response["message"]] if response["message"] else []
        data = response.get("data") or {}
        lines.extend(data.get("lines", []))
        for key in sorted(k for k in data if k != "lines"):
            if not isinstance(data[key], (dict, list)):
                lines.append(f"  {key}: {data[key]}")
        return "\n".join(lines)

    def render(self, response: Dict[str, Any], as_json: bool = False) -> str:
        return self.render_json(response) if as_json else self.render_text(response)
