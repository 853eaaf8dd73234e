# Módulo de configuración
# Variables de entorno (AppConfig) y configuración de experimentos (RunConfig)
