# Módulo de utilidades
# Logger, errores, serialización de tensores, checkpoints, E/S de rasgos y reportes
